//! Shared test oracles: brute-force payoff-ordering checks, independent of
//! the validation module's extraction and mapping-search machinery.

use lgdl::games::GameId;

/// A symmetric 2x2 matrix built from the free tuple (a, b, c, d):
/// cell(x,x) = (a,a), cell(x,y) = (b,c), cell(y,x) = (c,b), cell(y,y) = (d,d).
#[derive(Debug, Clone, Copy)]
pub struct SymmetricMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl SymmetricMatrix {
    /// Payoff facts over actions 'x' and 'y'.
    pub fn to_source(self) -> String {
        format!(
            "payoff('x', 'x', {a}, {a}).\npayoff('x', 'y', {b}, {c}).\npayoff('y', 'x', {c}, {b}).\npayoff('y', 'y', {d}, {d}).\n",
            a = self.a,
            b = self.b,
            c = self.c,
            d = self.d
        )
    }
}

/// Direct enumeration of both cooperate/defect assignments against the
/// game type's strict ordering, written straight over the tuple values.
pub fn brute_force_symmetric(game: GameId, m: SymmetricMatrix) -> bool {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    // Assignment 1: cooperate = x, defect = y -> T=c, R=a, P=d, S=b.
    // Assignment 2: cooperate = y, defect = x -> T=b, R=d, P=a, S=c.
    match game {
        GameId::Pd => (c > a && a > d && d > b) || (b > d && d > a && a > c),
        GameId::Hd => (c > a && a > b && b > d) || (b > d && d > c && c > a),
        GameId::Sh => (a > c && c > d && d > b) || (d > b && b > a && a > c),
        GameId::Bos | GameId::Mp => unreachable!("asymmetric games use the cell-level oracle"),
    }
}

/// A fully general 2x2 matrix with distinct row and column action names.
/// `cells[i][j]` is the (row, col) payoff pair for row action i, col action j.
#[derive(Debug, Clone, Copy)]
pub struct AsymmetricMatrix {
    pub cells: [[(i64, i64); 2]; 2],
}

impl AsymmetricMatrix {
    pub const ROW_ACTIONS: [&'static str; 2] = ["a", "b"];
    pub const COL_ACTIONS: [&'static str; 2] = ["x", "y"];

    pub fn to_source(self) -> String {
        let mut out = String::new();
        for (i, row_action) in Self::ROW_ACTIONS.iter().enumerate() {
            for (j, col_action) in Self::COL_ACTIONS.iter().enumerate() {
                let (u, v) = self.cells[i][j];
                out.push_str(&format!("payoff('{row_action}', '{col_action}', {u}, {v}).\n"));
            }
        }
        out
    }
}

/// Direct enumeration of all four U/D x L/R assignments against the
/// asymmetric orderings.
pub fn brute_force_asymmetric(game: GameId, m: AsymmetricMatrix) -> bool {
    for (u, d) in [(0usize, 1usize), (1, 0)] {
        for (l, r) in [(0usize, 1usize), (1, 0)] {
            let w = m.cells[u][l];
            let x = m.cells[u][r];
            let y = m.cells[d][l];
            let z = m.cells[d][r];
            let ok = match game {
                GameId::Bos => {
                    w.0 > z.0 && z.0 > x.0 && z.0 > y.0 && z.1 > w.1 && w.1 > x.1 && w.1 > y.1
                }
                GameId::Mp => w.0.min(z.0) > x.0.max(y.0) && x.1.min(y.1) > w.1.max(z.1),
                _ => unreachable!("symmetric games use the tuple oracle"),
            };
            if ok {
                return true;
            }
        }
    }
    false
}

/// The payoff-validity clause for the dilemma in the solver's own
/// language, used to cross-check the native constraint checker.
pub const VALID_PD_PAYOFFS_SRC: &str = "\
valid_pd_payoffs(T, R, P, S, C, D) if
    payoff(C, C, R, R) and
    payoff(C, D, S, T) and
    T > R and
    payoff(D, C, T, S) and
    payoff(D, D, P, P) and
    R > P and
    P > S.
";
