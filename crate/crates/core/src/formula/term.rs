use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;

/// A program variable, optionally carrying an SSA index.
///
/// An absent index denotes the current-state variable. Indexed variables are
/// the fresh copies introduced by strongest postconditions and path encodings;
/// they are implicitly existentially quantified wherever they occur.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub index: Option<u32>,
}

impl Var {
    pub fn new(name: &str) -> Self {
        Var {
            name: Arc::from(name),
            index: None,
        }
    }

    pub fn indexed(name: &str, index: u32) -> Self {
        Var {
            name: Arc::from(name),
            index: Some(index),
        }
    }

    pub fn with_index(&self, index: Option<u32>) -> Self {
        Var {
            name: self.name.clone(),
            index,
        }
    }

    pub fn is_current(&self) -> bool {
        self.index.is_none()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            None => write!(f, "{}", self.name),
            Some(i) => write!(f, "{}@{}", self.name, i),
        }
    }
}

/// Linear integer term `constant + sum(coeff * var)`.
///
/// Coefficients are nonzero and sorted by variable, so structural equality is
/// semantic equality of linear forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Term {
    constant: i64,
    coeffs: Vec<(Var, i64)>,
}

impl Term {
    pub fn constant(c: i64) -> Self {
        Term {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn var(v: Var) -> Self {
        Term {
            constant: 0,
            coeffs: vec![(v, 1)],
        }
    }

    pub fn from_parts(constant: i64, parts: impl IntoIterator<Item = (Var, i64)>) -> Self {
        let mut acc: BTreeMap<Var, i64> = BTreeMap::new();
        for (v, c) in parts {
            *acc.entry(v).or_insert(0) += c;
        }
        Term {
            constant,
            coeffs: acc.into_iter().filter(|(_, c)| *c != 0).collect(),
        }
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn coeffs(&self) -> &[(Var, i64)] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff_of(&self, v: &Var) -> i64 {
        self.coeffs
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.coeffs[i].1)
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Term) -> Term {
        Term::from_parts(
            self.constant + other.constant,
            self.coeffs.iter().chain(other.coeffs.iter()).cloned(),
        )
    }

    pub fn sub(&self, other: &Term) -> Term {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i64) -> Term {
        if k == 0 {
            return Term::constant(0);
        }
        Term {
            constant: self.constant * k,
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
        }
    }

    pub fn neg(&self) -> Term {
        self.scale(-1)
    }

    pub fn add_constant(&self, k: i64) -> Term {
        Term {
            constant: self.constant + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.iter().map(|(v, _)| v)
    }

    /// Rewrites every variable through `f`; coefficients of variables that
    /// collide after the rewrite are summed.
    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Var) -> Term {
        Term::from_parts(
            self.constant,
            self.coeffs.iter().map(|(v, c)| (f(v), *c)),
        )
    }

    /// Replaces `target` by `replacement`.
    pub fn substitute(&self, target: &Var, replacement: &Term) -> Term {
        let k = self.coeff_of(target);
        if k == 0 {
            return self.clone();
        }
        let rest = Term::from_parts(
            self.constant,
            self.coeffs.iter().filter(|(v, _)| v != target).cloned(),
        );
        rest.add(&replacement.scale(k))
    }

    pub fn eval_int(&self, env: impl Fn(&Var) -> i64) -> i64 {
        self.coeffs
            .iter()
            .fold(self.constant, |acc, (v, c)| acc + c * env(v))
    }

    fn coeff_gcd(&self) -> i64 {
        self.coeffs.iter().fold(0i64, |g, (_, c)| g.gcd(c))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "{}", self.constant);
        }
        for (i, (v, c)) in self.coeffs.iter().enumerate() {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if *c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if mag == 1 {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}*{}", mag, v)?;
            }
        }
        if self.constant > 0 {
            write!(f, " + {}", self.constant)?;
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    /// `t = 0`
    Eq,
    /// `t <= 0`
    Le,
}

/// Canonical linear constraint `term rel 0`.
///
/// Built only through [`Atom::build`], which folds constant atoms to `true` /
/// `false`, divides by the coefficient gcd (tightening the constant of `<=`
/// over the integers) and fixes the sign of equalities so that the leading
/// coefficient is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    rel: Rel,
    term: Term,
}

/// Result of canonicalizing an atom: constant atoms collapse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Canon {
    Const(bool),
    Atom(Atom),
}

impl Atom {
    pub fn build(term: Term, rel: Rel) -> Canon {
        if term.is_constant() {
            let c = term.constant;
            return Canon::Const(match rel {
                Rel::Eq => c == 0,
                Rel::Le => c <= 0,
            });
        }
        let g = term.coeff_gcd();
        match rel {
            Rel::Le => {
                let constant = Integer::div_ceil(&term.constant, &g);
                let coeffs = term.coeffs.into_iter().map(|(v, c)| (v, c / g)).collect();
                Canon::Atom(Atom {
                    rel,
                    term: Term { constant, coeffs },
                })
            }
            Rel::Eq => {
                if term.constant % g != 0 {
                    return Canon::Const(false);
                }
                let sign = if term.coeffs[0].1 < 0 { -1 } else { 1 };
                let g = g * sign;
                let constant = term.constant / g;
                let coeffs = term.coeffs.into_iter().map(|(v, c)| (v, c / g)).collect();
                Canon::Atom(Atom {
                    rel,
                    term: Term { constant, coeffs },
                })
            }
        }
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.term.vars()
    }

    pub fn map_vars(&self, f: impl FnMut(&Var) -> Var) -> Canon {
        Atom::build(self.term.map_vars(f), self.rel)
    }

    pub fn eval_int(&self, env: impl Fn(&Var) -> i64) -> bool {
        let v = self.term.eval_int(env);
        match self.rel {
            Rel::Eq => v == 0,
            Rel::Le => v <= 0,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Print as `lhs op rhs` with the constant moved to the right.
        let all_neg = self.term.coeffs.iter().all(|(_, c)| *c < 0);
        let (lhs, rhs, op) = match self.rel {
            Rel::Eq => (
                Term {
                    constant: 0,
                    coeffs: self.term.coeffs.clone(),
                },
                -self.term.constant,
                "==",
            ),
            Rel::Le if all_neg => (
                Term {
                    constant: 0,
                    coeffs: self.term.neg().coeffs,
                },
                self.term.constant,
                ">=",
            ),
            Rel::Le => (
                Term {
                    constant: 0,
                    coeffs: self.term.coeffs.clone(),
                },
                -self.term.constant,
                "<=",
            ),
        };
        write!(f, "{} {} {}", lhs, op, rhs)
    }
}
