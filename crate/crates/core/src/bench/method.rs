use std::fmt;
use std::str::FromStr;

use super::BenchError;
use crate::identify::{GridMode, Scheme};
use crate::regpath::{Algorithm, PenaltyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Ebic,
    Slope,
    DimJump,
    LinSelect,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Ebic, Rule::Slope, Rule::DimJump, Rule::LinSelect];

    fn label(self) -> &'static str {
        match self {
            Rule::Ebic => "ebic",
            Rule::Slope => "slope",
            Rule::DimJump => "dim-jump",
            Rule::LinSelect => "linselect",
        }
    }
}

/// One executable pipeline of the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Path, refit collection, selection criterion.
    Select {
        algorithm: Algorithm,
        penalty: PenaltyKind,
        rule: Rule,
    },
    /// Bolasso (bootstrap) or Stability Selection (half subsamples).
    Resample {
        algorithm: Algorithm,
        penalty: PenaltyKind,
        randomized: bool,
        scheme: Scheme,
        mode: GridMode,
    },
    Tigress,
    Knockoffs { penalty: PenaltyKind },
    Escv { penalty: PenaltyKind },
}

const ALGORITHMS: [Algorithm; 2] = [Algorithm::Lars, Algorithm::GradientDescent];
const PENALTIES: [PenaltyKind; 2] = [PenaltyKind::Lasso, PenaltyKind::ElasticNet];

fn alg_label(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Lars => "lars",
        Algorithm::GradientDescent => "gd",
    }
}

impl Method {
    /// Every combination of the study, in table order.
    pub fn all() -> Vec<Method> {
        let mut out = Vec::new();
        for algorithm in ALGORITHMS {
            for penalty in PENALTIES {
                for rule in Rule::ALL {
                    out.push(Method::Select { algorithm, penalty, rule });
                }
            }
        }
        for mode in [GridMode::SharedSamples, GridMode::PerLambda] {
            for algorithm in ALGORITHMS {
                if mode == GridMode::PerLambda && algorithm == Algorithm::Lars {
                    continue;
                }
                for penalty in PENALTIES {
                    for randomized in [false, true] {
                        for scheme in [Scheme::Bootstrap, Scheme::HalfSubsample] {
                            out.push(Method::Resample {
                                algorithm,
                                penalty,
                                randomized,
                                scheme,
                                mode,
                            });
                        }
                    }
                }
            }
        }
        out.push(Method::Tigress);
        for penalty in PENALTIES {
            out.push(Method::Knockoffs { penalty });
        }
        for penalty in PENALTIES {
            out.push(Method::Escv { penalty });
        }
        out
    }

    /// The path this method ranks variables along, if any.
    pub fn path_key(&self) -> Option<(Algorithm, PenaltyKind)> {
        match *self {
            Method::Select { algorithm, penalty, .. } => Some((algorithm, penalty)),
            Method::Escv { penalty } => Some((Algorithm::GradientDescent, penalty)),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Method::Select { algorithm, penalty, rule } => {
                write!(f, "{}+{}+{}", alg_label(algorithm), penalty.label(), rule.label())
            }
            Method::Resample {
                algorithm,
                penalty,
                randomized,
                scheme,
                mode,
            } => {
                let rand = if randomized { "-rand" } else { "" };
                let scheme = match scheme {
                    Scheme::Bootstrap => "bolasso",
                    Scheme::HalfSubsample => "stabsel",
                };
                let mode = match mode {
                    GridMode::SharedSamples => "shared",
                    GridMode::PerLambda => "per-lambda",
                };
                write!(f, "{}+{}{rand}+{scheme}+{mode}", alg_label(algorithm), penalty.label())
            }
            Method::Tigress => f.write_str("tigress"),
            Method::Knockoffs { penalty } => write!(f, "{}+knockoffs", penalty.label()),
            Method::Escv { penalty } => write!(f, "{}+escv", penalty.label()),
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BenchError::UnknownMethod(s.to_string());
        let parts: Vec<&str> = s.trim().split('+').collect();
        let alg = |t: &str| match t {
            "lars" => Some(Algorithm::Lars),
            "gd" => Some(Algorithm::GradientDescent),
            _ => None,
        };
        let pen = |t: &str| match t {
            "lasso" => Some((PenaltyKind::Lasso, false)),
            "enet" => Some((PenaltyKind::ElasticNet, false)),
            "lasso-rand" => Some((PenaltyKind::Lasso, true)),
            "enet-rand" => Some((PenaltyKind::ElasticNet, true)),
            _ => None,
        };
        let m = match parts.as_slice() {
            ["tigress"] => Method::Tigress,
            [p, "knockoffs"] => match pen(p).ok_or_else(bad)? {
                (penalty, false) => Method::Knockoffs { penalty },
                _ => return Err(bad()),
            },
            [p, "escv"] => match pen(p).ok_or_else(bad)? {
                (penalty, false) => Method::Escv { penalty },
                _ => return Err(bad()),
            },
            [a, p, r] => {
                let (penalty, rand) = pen(p).ok_or_else(bad)?;
                let rule = Rule::ALL.into_iter().find(|x| x.label() == *r).ok_or_else(bad)?;
                if rand {
                    return Err(bad());
                }
                Method::Select {
                    algorithm: alg(a).ok_or_else(bad)?,
                    penalty,
                    rule,
                }
            }
            [a, p, sch, md] => {
                let (penalty, randomized) = pen(p).ok_or_else(bad)?;
                let scheme = match *sch {
                    "bolasso" => Scheme::Bootstrap,
                    "stabsel" => Scheme::HalfSubsample,
                    _ => return Err(bad()),
                };
                let mode = match *md {
                    "shared" => GridMode::SharedSamples,
                    "per-lambda" => GridMode::PerLambda,
                    _ => return Err(bad()),
                };
                let algorithm = alg(a).ok_or_else(bad)?;
                if mode == GridMode::PerLambda && algorithm == Algorithm::Lars {
                    return Err(bad());
                }
                Method::Resample {
                    algorithm,
                    penalty,
                    randomized,
                    scheme,
                    mode,
                }
            }
            _ => return Err(bad()),
        };
        Ok(m)
    }
}

/// Expand a list of method names; `all` stands for every combination.
pub fn parse_methods<S: AsRef<str>>(names: &[S]) -> Result<Vec<Method>, BenchError> {
    let mut out: Vec<Method> = Vec::new();
    for name in names {
        let expanded = match name.as_ref().trim() {
            "all" => Method::all(),
            other => vec![other.parse()?],
        };
        for m in expanded {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_five_distinct_methods_round_trip() {
        let all = Method::all();
        assert_eq!(all.len(), 45);
        let selects = all.iter().filter(|m| matches!(m, Method::Select { .. })).count();
        assert_eq!(selects, 16);
        let shared = all
            .iter()
            .filter(|m| matches!(m, Method::Resample { mode: GridMode::SharedSamples, .. }))
            .count();
        assert_eq!(shared, 16);
        assert_eq!(all.len() - selects, 29);
        for m in &all {
            let s = m.to_string();
            assert_eq!(s.parse::<Method>().unwrap(), *m, "{s}");
        }
        let mut names: Vec<String> = all.iter().map(|m| m.to_string()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 45);
    }

    #[test]
    fn examples_parse() {
        for s in ["gd+lasso+ebic", "lars+enet+linselect", "gd+enet-rand+bolasso+shared", "enet+knockoffs", "tigress", "lasso+escv"] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        for s in ["lars+lasso+bolasso+per-lambda", "gd+lasso-rand+ebic", "foo", "enet-rand+escv", "gd+lasso"] {
            assert!(s.parse::<Method>().is_err(), "{s}");
        }
        assert_eq!(parse_methods(&["all", "tigress"]).unwrap().len(), 45);
    }
}
