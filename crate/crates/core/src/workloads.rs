//! Benchmark program generators.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("test_locks needs at least one lock, got {0}")]
pub struct LockCountError(pub usize);

/// The `test_locks_n` family: a nondeterministic loop whose body acquires
/// lock `i` when flag `p_i` is set and later checks and releases it under
/// the same guard. The error location is unreachable.
///
/// With `bug`, the release of the last lock is guarded by `p_n == 0`
/// instead, so its assertion can fail.
pub fn gen_test_locks(n: usize, bug: bool) -> Result<String, LockCountError> {
    if n < 1 {
        return Err(LockCountError(n));
    }
    let mut s = String::new();
    let _ = writeln!(s, "// test_locks_{}{}", n, if bug { " (bug)" } else { "" });
    for i in 1..=n {
        let _ = writeln!(s, "int p{i};\nint lk{i};");
    }
    for i in 1..=n {
        let _ = writeln!(s, "p{i} = nondet();");
    }
    s.push_str("while (*) {\n");
    for i in 1..=n {
        let _ = writeln!(s, "  lk{i} = 0;");
    }
    for i in 1..=n {
        let _ = writeln!(s, "  if (p{i} != 0) {{\n    lk{i} = 1;\n  }}");
    }
    for i in 1..=n {
        let guard = if bug && i == n { "==" } else { "!=" };
        let _ = writeln!(
            s,
            "  if (p{i} {guard} 0) {{\n    assert(lk{i} == 1);\n    lk{i} = 0;\n  }}"
        );
    }
    s.push_str("}\n");
    Ok(s)
}
