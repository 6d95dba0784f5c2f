//! Doc-test shim; chapters added once written.
