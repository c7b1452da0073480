//! Line-oriented `key = value` configuration with `[section]` headers.

use std::fmt::{self, Write as _};

use etc_core::bench::{BenchConfig, PolicySpec};
use etc_core::hybrid::SolverConfig;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyName {
    Iss,
    Wl,
    EtaThreshold,
    Periodic,
}

impl PolicyName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "iss" => Self::Iss,
            "wl" => Self::Wl,
            "eta_threshold" => Self::EtaThreshold,
            "periodic" => Self::Periodic,
            _ => return None,
        })
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Iss => "iss",
            Self::Wl => "wl",
            Self::EtaThreshold => "eta_threshold",
            Self::Periodic => "periodic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSection {
    pub model: String,
    pub d: f64,
    pub x0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicySection {
    /// `None` lets `bench` run the full comparison set and `simulate` use
    /// the η rule.
    pub kind: Option<PolicyName>,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub epsilon: f64,
    pub eta0: f64,
    pub delta_gain: f64,
    pub period: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSection {
    pub t_end: f64,
    pub h: f64,
    pub event_tol: f64,
    pub max_jumps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSection {
    pub n_runs: usize,
    pub seed: u64,
    pub x0_min: f64,
    pub x0_max: f64,
    pub d_min: f64,
    pub d_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub system: SystemSection,
    pub policy: PolicySection,
    pub sim: SimSection,
    pub bench: BenchSection,
}

pub const MODEL_EXAMPLE_VI: &str = "example_vi";

impl Default for Config {
    fn default() -> Self {
        Self {
            system: SystemSection {
                model: MODEL_EXAMPLE_VI.to_string(),
                d: 0.5,
                x0: 0.5,
            },
            policy: PolicySection {
                kind: None,
                sigma: 0.5,
                sigma_bar: 1e-3,
                epsilon: 1e-6,
                eta0: 1.0,
                delta_gain: 0.5,
                period: 0.368,
            },
            sim: SimSection {
                t_end: 20.0,
                h: 1e-3,
                event_tol: 1e-9,
                max_jumps: 100_000,
            },
            bench: BenchSection {
                n_runs: 200,
                seed: 42,
                x0_min: -1.0,
                x0_max: 1.0,
                d_min: 0.0,
                d_max: 1.0,
            },
        }
    }
}

fn type_err(line: usize, key: &str, value: &str, expected: &'static str) -> ConfigError {
    ConfigError::Type {
        line,
        key: key.to_string(),
        value: value.to_string(),
        expected,
    }
}

fn float(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(type_err(line, key, value, "a finite number")),
    }
}

fn int<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| type_err(line, key, value, "a non-negative integer"))
}

/// Parses configuration text; omitted keys keep their defaults.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::default();
    let mut section: Option<String> = None;
    let mut seen: Vec<(String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("malformed section header `{content}`"),
            })?;
            let name = name.trim();
            if !matches!(name, "system" | "policy" | "sim" | "bench") {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            return Err(ConfigError::Parse {
                line,
                msg: format!("`{key}` appears before any section header"),
            });
        };
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "empty key".to_string(),
            });
        }
        let id = (sec.to_string(), key.to_string());
        if seen.contains(&id) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{key}` in [{sec}]"),
            });
        }
        seen.push(id);

        let (s, p, m, b) = (&mut cfg.system, &mut cfg.policy, &mut cfg.sim, &mut cfg.bench);
        match (sec, key) {
            ("system", "model") => {
                if value != MODEL_EXAMPLE_VI {
                    return Err(type_err(line, key, value, "`example_vi`"));
                }
                s.model = value.to_string();
            }
            ("system", "d") => s.d = float(line, key, value)?,
            ("system", "x0") => s.x0 = float(line, key, value)?,
            ("policy", "kind") => {
                p.kind = Some(PolicyName::parse(value).ok_or_else(|| {
                    type_err(line, key, value, "one of iss, wl, eta_threshold, periodic")
                })?)
            }
            ("policy", "sigma") => p.sigma = float(line, key, value)?,
            ("policy", "sigma_bar") => p.sigma_bar = float(line, key, value)?,
            ("policy", "epsilon") => p.epsilon = float(line, key, value)?,
            ("policy", "eta0") => p.eta0 = float(line, key, value)?,
            ("policy", "delta_gain") => p.delta_gain = float(line, key, value)?,
            ("policy", "period") => p.period = float(line, key, value)?,
            ("sim", "t_end") => m.t_end = float(line, key, value)?,
            ("sim", "h") => m.h = float(line, key, value)?,
            ("sim", "event_tol") => m.event_tol = float(line, key, value)?,
            ("sim", "max_jumps") => m.max_jumps = int(line, key, value)?,
            ("bench", "n_runs") => b.n_runs = int(line, key, value)?,
            ("bench", "seed") => b.seed = int(line, key, value)?,
            ("bench", "x0_min") => b.x0_min = float(line, key, value)?,
            ("bench", "x0_max") => b.x0_max = float(line, key, value)?,
            ("bench", "d_min") => b.d_min = float(line, key, value)?,
            ("bench", "d_max") => b.d_max = float(line, key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    section: sec.to_string(),
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(cfg)
}

impl Config {
    /// Config text that parses back to `self`.
    pub fn serialize(&self) -> String {
        let (s, p, m, b) = (&self.system, &self.policy, &self.sim, &self.bench);
        let mut out = String::new();
        let _ = writeln!(out, "[system]\nmodel = {}\nd = {}\nx0 = {}", s.model, s.d, s.x0);
        out.push_str("\n[policy]\n");
        if let Some(kind) = p.kind {
            let _ = writeln!(out, "kind = {kind}");
        }
        let _ = writeln!(
            out,
            "sigma = {}\nsigma_bar = {}\nepsilon = {}\neta0 = {}\ndelta_gain = {}\nperiod = {}",
            p.sigma, p.sigma_bar, p.epsilon, p.eta0, p.delta_gain, p.period
        );
        let _ = writeln!(
            out,
            "\n[sim]\nt_end = {}\nh = {}\nevent_tol = {}\nmax_jumps = {}",
            m.t_end, m.h, m.event_tol, m.max_jumps
        );
        let _ = writeln!(
            out,
            "\n[bench]\nn_runs = {}\nseed = {}\nx0_min = {}\nx0_max = {}\nd_min = {}\nd_max = {}",
            b.n_runs, b.seed, b.x0_min, b.x0_max, b.d_min, b.d_max
        );
        out
    }

    /// The serialized config with every line prefixed by `# `.
    pub fn comment_block(&self) -> String {
        self.serialize()
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| format!("# {l}\n"))
            .collect()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            h: self.sim.h,
            event_tol: self.sim.event_tol,
            t_end: self.sim.t_end,
            max_jumps: self.sim.max_jumps,
            ..SolverConfig::default()
        }
    }

    /// The configured policy, the η rule when `kind` is absent.
    pub fn policy_spec(&self) -> PolicySpec {
        let p = &self.policy;
        match p.kind.unwrap_or(PolicyName::EtaThreshold) {
            PolicyName::Iss => PolicySpec::Iss,
            PolicyName::Wl => PolicySpec::Wl {
                sigma_bar: p.sigma_bar,
                epsilon: p.epsilon,
            },
            PolicyName::EtaThreshold => PolicySpec::Eta {
                eta0: p.eta0,
                delta_gain: p.delta_gain,
            },
            PolicyName::Periodic => PolicySpec::Periodic { period: p.period },
        }
    }

    pub fn bench_config(&self) -> BenchConfig {
        let b = &self.bench;
        let policy_set = match self.policy.kind {
            Some(_) => vec![self.policy_spec()],
            None => {
                // The comparison set, with its parameters taken from the config.
                let p = &self.policy;
                let mut set = vec![
                    PolicySpec::Periodic { period: p.period },
                    PolicySpec::Wl {
                        sigma_bar: p.sigma_bar,
                        epsilon: p.epsilon,
                    },
                ];
                for eta0 in [0.1, 1.0, 2.0] {
                    set.push(PolicySpec::Eta {
                        eta0,
                        delta_gain: p.delta_gain,
                    });
                }
                set
            }
        };
        BenchConfig {
            n_runs: b.n_runs,
            seed: b.seed,
            x0_range: (b.x0_min, b.x0_max),
            d_range: (b.d_min, b.d_max),
            sigma: self.policy.sigma,
            policy_set,
            solver: self.solver(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), Config::default());
        assert_eq!(parse_config("# nothing\n\n").unwrap(), Config::default());
    }

    #[test]
    fn defaults_match_documented_values() {
        let c = Config::default();
        assert_eq!(c.sim.h, 1e-3);
        assert_eq!(c.sim.event_tol, 1e-9);
        assert_eq!(c.policy.epsilon, 1e-6);
        assert_eq!(c.policy.sigma, 0.5);
        assert_eq!(c.bench.seed, 42);
    }

    #[test]
    fn eta_policy_section() {
        let c = parse_config("[policy]\nkind = eta_threshold\neta0 = 2.0").unwrap();
        assert_eq!(c.policy.kind, Some(PolicyName::EtaThreshold));
        assert_eq!(
            c.policy_spec(),
            PolicySpec::Eta {
                eta0: 2.0,
                delta_gain: 0.5
            }
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[sim]\nh = abc").unwrap_err();
        assert!(matches!(e, ConfigError::Type { line: 2, .. }), "{e:?}");
        let e = parse_config("[sim]\n\nspeed = 3").unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 3, .. }), "{e:?}");
        let e = parse_config("d = 0.1").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }));
        let e = parse_config("[plant]").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }));
        let e = parse_config("[sim]\nt_end = inf").unwrap_err();
        assert!(matches!(e, ConfigError::Type { line: 2, .. }));
        let e = parse_config("[bench]\nn_runs = -3").unwrap_err();
        assert!(matches!(e, ConfigError::Type { line: 2, .. }));
        let e = parse_config("[policy]\nkind = fast").unwrap_err();
        assert!(matches!(e, ConfigError::Type { line: 2, .. }));
        let e = parse_config("[sim]\nh = 0.1\nh = 0.2").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 3, .. }));
        let e = parse_config("[system\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  [ sim ]  # integrator\n  t_end=5 # short\n").unwrap();
        assert_eq!(c.sim.t_end, 5.0);
    }

    #[test]
    fn unset_kind_runs_comparison_set() {
        let set = Config::default().bench_config().policy_set;
        assert_eq!(set, PolicySpec::table1());
    }
}
