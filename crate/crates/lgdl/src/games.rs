//! The shipped corpus: five canonical 2x2 games and six reference
//! strategies, as source text plus the metadata the rest of the system
//! needs (payoff matrices, declaration-ordered actions, one-line natural
//! language descriptions).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::term::Term;

/// The five canonical game types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameId {
    /// Prisoner's Dilemma: T > R > P > S.
    #[serde(rename = "PD", alias = "pd")]
    Pd,
    /// Hawk-Dove: T > R > S > P.
    #[serde(rename = "HD", alias = "hd")]
    Hd,
    /// Stag Hunt: R > T > P > S.
    #[serde(rename = "SH", alias = "sh")]
    Sh,
    /// Battle of the Sexes: coordination with opposed favorites.
    #[serde(rename = "BoS", alias = "BS", alias = "bos")]
    Bos,
    /// Matching Pennies: zero-sum matching.
    #[serde(rename = "MP", alias = "mp")]
    Mp,
}

impl GameId {
    pub const ALL: [GameId; 5] = [GameId::Pd, GameId::Hd, GameId::Sh, GameId::Bos, GameId::Mp];

    pub fn code(&self) -> &'static str {
        match self {
            GameId::Pd => "pd",
            GameId::Hd => "hd",
            GameId::Sh => "sh",
            GameId::Bos => "bos",
            GameId::Mp => "mp",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GameId {
    type Err = String;

    fn from_str(s: &str) -> Result<GameId, String> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(GameId::Pd),
            "hd" => Ok(GameId::Hd),
            "sh" => Ok(GameId::Sh),
            "bos" | "bs" => Ok(GameId::Bos),
            "mp" => Ok(GameId::Mp),
            other => Err(format!("unknown game id `{other}` (expected pd, hd, sh, bos, or mp)")),
        }
    }
}

/// A shipped game: source text plus its matrix in declaration order.
#[derive(Debug, Clone)]
pub struct CanonicalGame {
    pub id: GameId,
    pub source: &'static str,
    /// The two actions in possible/2 declaration order.
    pub actions: (&'static str, &'static str),
    /// Payoff cells `(row_action, col_action, u_row, u_col)`.
    pub payoff_matrix: [(&'static str, &'static str, i64, i64); 4],
    pub description: &'static str,
}

impl CanonicalGame {
    /// Declaration-ordered actions as terms.
    pub fn action_terms(&self) -> (Term, Term) {
        (Term::atom(self.actions.0), Term::atom(self.actions.1))
    }

    /// The payoff pair for a cell, if the actions name one.
    pub fn payoff(&self, row: &str, col: &str) -> Option<(i64, i64)> {
        self.payoff_matrix
            .iter()
            .find(|(r, c, _, _)| *r == row && *c == col)
            .map(|&(_, _, u1, u2)| (u1, u2))
    }
}

/// Returns the shipped program and metadata for a canonical game.
pub fn canonical_game(id: GameId) -> CanonicalGame {
    match id {
        GameId::Pd => CanonicalGame {
            id,
            source: include_str!("../games/pd.lgdl"),
            actions: ("D", "C"),
            payoff_matrix: [("D", "D", 1, 1), ("C", "D", 0, 5), ("D", "C", 5, 0), ("C", "C", 3, 3)],
            description: "Two players each choose to defect or cooperate without seeing the \
                          other's choice; defecting against a cooperator pays best, mutual \
                          cooperation beats mutual defection, and a lone cooperator gets nothing.",
        },
        GameId::Hd => CanonicalGame {
            id,
            source: include_str!("../games/hd.lgdl"),
            actions: ("D", "C"),
            payoff_matrix: [("D", "D", 1, 1), ("C", "D", 2, 4), ("D", "C", 4, 2), ("C", "C", 3, 3)],
            description: "Two contestants can escalate or yield over a resource; escalating \
                          against a yielder wins it, but two escalators hurt each other more \
                          than a lone yielder loses.",
        },
        GameId::Sh => CanonicalGame {
            id,
            source: include_str!("../games/sh.lgdl"),
            actions: ("D", "C"),
            payoff_matrix: [("D", "D", 2, 2), ("C", "D", 1, 3), ("D", "C", 3, 1), ("C", "C", 4, 4)],
            description: "Two hunters choose between a stag that needs both of them and a hare \
                          either can catch alone; hunting the stag together beats everything, \
                          but a lone stag hunter goes home empty.",
        },
        GameId::Bos => CanonicalGame {
            id,
            source: include_str!("../games/bos.lgdl"),
            actions: ("F", "O"),
            payoff_matrix: [("F", "F", 3, 2), ("F", "O", 0, 0), ("O", "F", 0, 0), ("O", "O", 2, 3)],
            description: "A couple wants to spend the evening together but one prefers the \
                          football match and the other the opera; being apart pays nothing.",
        },
        GameId::Mp => CanonicalGame {
            id,
            source: include_str!("../games/mp.lgdl"),
            actions: ("H", "T"),
            payoff_matrix: [("H", "H", 1, -1), ("H", "T", -1, 1), ("T", "H", -1, 1), ("T", "T", 1, -1)],
            description: "Each player secretly shows heads or tails; one wins a point when the \
                          pennies match, the other wins when they differ.",
        },
    }
}

/// The six reference strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    AntiDefaultMove,
    AntiTitForTat,
    BestResponse,
    DefaultMove,
    Random,
    TitForTat,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::AntiDefaultMove,
        StrategyId::AntiTitForTat,
        StrategyId::BestResponse,
        StrategyId::DefaultMove,
        StrategyId::Random,
        StrategyId::TitForTat,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            StrategyId::AntiDefaultMove => "anti_default_move",
            StrategyId::AntiTitForTat => "anti_tit_for_tat",
            StrategyId::BestResponse => "best_response",
            StrategyId::DefaultMove => "default_move",
            StrategyId::Random => "random",
            StrategyId::TitForTat => "tit_for_tat",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StrategyId {
    type Err = String;

    fn from_str(s: &str) -> Result<StrategyId, String> {
        let normalized = s.to_ascii_lowercase().replace('-', "_");
        StrategyId::ALL
            .into_iter()
            .find(|id| id.code() == normalized)
            .ok_or_else(|| format!("unknown strategy id `{s}`"))
    }
}

/// A shipped strategy: its select/4 source and natural language description.
#[derive(Debug, Clone)]
pub struct StrategySource {
    pub id: StrategyId,
    pub source: &'static str,
    pub nl_description: &'static str,
}

/// Returns the shipped source for a reference strategy.
pub fn strategy_source(id: StrategyId) -> StrategySource {
    match id {
        StrategyId::AntiDefaultMove => StrategySource {
            id,
            source: include_str!("../strategies/anti_default_move.lgdl"),
            nl_description: "Always play the opposite of the default move.",
        },
        StrategyId::AntiTitForTat => StrategySource {
            id,
            source: include_str!("../strategies/anti_tit_for_tat.lgdl"),
            nl_description: "Start with the default move. Then play the opposite of the opponent's previous move.",
        },
        StrategyId::BestResponse => StrategySource {
            id,
            source: include_str!("../strategies/best_response.lgdl"),
            nl_description: "Start with the default move. Then play the move with the highest payoff against the opponent's previous move.",
        },
        StrategyId::DefaultMove => StrategySource {
            id,
            source: include_str!("../strategies/default_move.lgdl"),
            nl_description: "Always play the default move.",
        },
        StrategyId::Random => StrategySource {
            id,
            source: include_str!("../strategies/random.lgdl"),
            nl_description: "Pick one of the possible moves uniformly at random.",
        },
        StrategyId::TitForTat => StrategySource {
            id,
            source: include_str!("../strategies/tit_for_tat.lgdl"),
            nl_description: "Start with the default move. Then repeat the opponent's previous move.",
        },
    }
}
