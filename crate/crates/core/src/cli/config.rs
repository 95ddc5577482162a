//! Line-based experiment configs: `key = value`, `#` comments, comma-separated lists.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    MlfEval,
    VerifyLaplace,
    SolveConst,
    SolveVar,
    VerifyDecay,
    ParametrixReport,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::MlfEval,
        Command::VerifyLaplace,
        Command::SolveConst,
        Command::SolveVar,
        Command::VerifyDecay,
        Command::ParametrixReport,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::MlfEval => "mlf-eval",
            Command::VerifyLaplace => "verify-laplace",
            Command::SolveConst => "solve-const",
            Command::SolveVar => "solve-var",
            Command::VerifyDecay => "verify-decay",
            Command::ParametrixReport => "parametrix-report",
        }
    }

    fn required(&self) -> &'static [&'static str] {
        match self {
            Command::MlfEval => &["alpha", "beta"],
            Command::VerifyLaplace => &["alpha", "beta"],
            Command::SolveConst => &["r", "t"],
            Command::SolveVar => &["r", "t"],
            Command::VerifyDecay => &["alpha", "beta"],
            Command::ParametrixReport => &["r"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(usize),
    List(Vec<f64>),
    Text(String),
}

fn at_line(line: &Option<usize>) -> String {
    line.map_or_else(String::new, |l| format!("line {l}: "))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}{key}: {message}", at_line(.line))]
    Validation {
        line: Option<usize>,
        key: String,
        message: String,
    },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
}

#[derive(Clone, Copy)]
enum Kind {
    Number,
    Integer,
    List,
    Text,
}

type Check = fn(&Value) -> Result<(), String>;

struct KeySpec {
    name: &'static str,
    kind: Kind,
    check: Check,
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Number(x) => *x,
        Value::Integer(i) => *i as f64,
        _ => f64::NAN,
    }
}

fn any(_: &Value) -> Result<(), String> {
    Ok(())
}
fn finite(v: &Value) -> Result<(), String> {
    if num(v).is_finite() {
        Ok(())
    } else {
        Err("must be finite".into())
    }
}
fn positive(v: &Value) -> Result<(), String> {
    if num(v) > 0.0 && num(v).is_finite() {
        Ok(())
    } else {
        Err(format!("{} must be positive", num(v)))
    }
}
fn negative(v: &Value) -> Result<(), String> {
    if num(v) < 0.0 && num(v).is_finite() {
        Ok(())
    } else {
        Err(format!("{} must be negative", num(v)))
    }
}
fn unit_open(v: &Value) -> Result<(), String> {
    let x = num(v);
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(format!("{x} outside the admissible interval (0, 1)"))
    }
}
fn power_of_two(v: &Value) -> Result<(), String> {
    match v {
        Value::Integer(n) if *n >= 2 && n.is_power_of_two() => Ok(()),
        _ => Err(format!("{} must be a power of two", num(v))),
    }
}
fn correctors(v: &Value) -> Result<(), String> {
    match v {
        Value::Integer(j) if *j <= crate::sgcalc::MAX_CORRECTORS => Ok(()),
        _ => Err(format!(
            "{} exceeds the maximum of {}",
            num(v),
            crate::sgcalc::MAX_CORRECTORS
        )),
    }
}
fn deriv_order(v: &Value) -> Result<(), String> {
    match v {
        Value::Integer(j) if *j <= crate::mlf::INTEGRAL_MAX_DERIV => Ok(()),
        _ => Err(format!(
            "{} exceeds the maximum derivative order {}",
            num(v),
            crate::mlf::INTEGRAL_MAX_DERIV
        )),
    }
}
fn dimension(v: &Value) -> Result<(), String> {
    match v {
        Value::Integer(1 | 2) => Ok(()),
        _ => Err(format!("{} not in {{1, 2}}", num(v))),
    }
}
fn at_least_two(v: &Value) -> Result<(), String> {
    match v {
        Value::Integer(n) if *n >= 2 => Ok(()),
        _ => Err(format!("{} must be at least 2", num(v))),
    }
}
fn times(v: &Value) -> Result<(), String> {
    match v {
        Value::List(ts) if !ts.is_empty() && ts.iter().all(|t| *t >= 0.0 && t.is_finite()) => {
            Ok(())
        }
        _ => Err("times must be non-negative and finite".into()),
    }
}
fn finite_list(v: &Value) -> Result<(), String> {
    match v {
        Value::List(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => Ok(()),
        _ => Err("list entries must be finite".into()),
    }
}
fn positive_list(v: &Value) -> Result<(), String> {
    match v {
        Value::List(xs) if !xs.is_empty() && xs.iter().all(|x| *x > 0.0 && x.is_finite()) => Ok(()),
        _ => Err("list entries must be positive".into()),
    }
}
fn grid_triple(v: &Value) -> Result<(), String> {
    match v {
        Value::List(xs)
            if xs.len() == 3
                && xs.iter().all(|x| x.is_finite())
                && xs[2] >= 2.0
                && xs[2].fract() == 0.0 =>
        {
            Ok(())
        }
        _ => Err("expected start, end, count with count ≥ 2".into()),
    }
}
fn pair(v: &Value) -> Result<(), String> {
    match v {
        Value::List(xs) if xs.len() == 2 && xs.iter().all(|x| *x >= 0.0 && x.is_finite()) => Ok(()),
        _ => Err("expected two non-negative numbers".into()),
    }
}
fn hypo(v: &Value) -> Result<(), String> {
    match v {
        Value::List(xs) if xs.len() == 3 && xs.iter().all(|x| *x >= 0.0 && x.is_finite()) => Ok(()),
        _ => Err("expected m', mu', R, all non-negative".into()),
    }
}
fn symbol_name(v: &Value) -> Result<(), String> {
    match v {
        Value::Text(s) if crate::sgcalc::BUILTIN_NAMES.contains(&s.as_str()) || s == "custom" => {
            Ok(())
        }
        Value::Text(s) => Err(format!(
            "unknown symbol '{s}', expected one of poly_sg, multiplier_xi2, custom"
        )),
        _ => Err("expected a symbol name".into()),
    }
}
fn source_name(v: &Value) -> Result<(), String> {
    match v {
        Value::Text(s) if s == "none" || s == "manufactured" => Ok(()),
        _ => Err("expected 'none' or 'manufactured'".into()),
    }
}
fn command_name(v: &Value) -> Result<(), String> {
    match v {
        Value::Text(s) => s.parse::<Command>().map(|_| ()),
        _ => Err("expected a command name".into()),
    }
}

const KEYS: &[KeySpec] = &[
    KeySpec {
        name: "command",
        kind: Kind::Text,
        check: command_name,
    },
    KeySpec {
        name: "r",
        kind: Kind::Number,
        check: unit_open,
    },
    KeySpec {
        name: "alpha",
        kind: Kind::Number,
        check: positive,
    },
    KeySpec {
        name: "beta",
        kind: Kind::Number,
        check: finite,
    },
    KeySpec {
        name: "mu",
        kind: Kind::Number,
        check: negative,
    },
    KeySpec {
        name: "j",
        kind: Kind::Integer,
        check: deriv_order,
    },
    KeySpec {
        name: "n",
        kind: Kind::Integer,
        check: power_of_two,
    },
    KeySpec {
        name: "L",
        kind: Kind::Number,
        check: positive,
    },
    KeySpec {
        name: "dim",
        kind: Kind::Integer,
        check: dimension,
    },
    KeySpec {
        name: "t",
        kind: Kind::List,
        check: times,
    },
    KeySpec {
        name: "t_grid",
        kind: Kind::List,
        check: grid_triple,
    },
    KeySpec {
        name: "z",
        kind: Kind::List,
        check: finite_list,
    },
    KeySpec {
        name: "z_grid",
        kind: Kind::List,
        check: grid_triple,
    },
    KeySpec {
        name: "decades",
        kind: Kind::List,
        check: grid_triple,
    },
    KeySpec {
        name: "J",
        kind: Kind::Integer,
        check: correctors,
    },
    KeySpec {
        name: "s",
        kind: Kind::List,
        check: positive_list,
    },
    KeySpec {
        name: "symbol",
        kind: Kind::Text,
        check: symbol_name,
    },
    KeySpec {
        name: "k",
        kind: Kind::Number,
        check: positive,
    },
    KeySpec {
        name: "coefficients",
        kind: Kind::List,
        check: finite_list,
    },
    KeySpec {
        name: "xi_terms",
        kind: Kind::Integer,
        check: any,
    },
    KeySpec {
        name: "orders",
        kind: Kind::List,
        check: pair,
    },
    KeySpec {
        name: "hypo",
        kind: Kind::List,
        check: hypo,
    },
    KeySpec {
        name: "source",
        kind: Kind::Text,
        check: source_name,
    },
    KeySpec {
        name: "width",
        kind: Kind::Number,
        check: positive,
    },
    KeySpec {
        name: "steps",
        kind: Kind::Integer,
        check: at_least_two,
    },
    KeySpec {
        name: "quad_steps",
        kind: Kind::Integer,
        check: at_least_two,
    },
    KeySpec {
        name: "nodes",
        kind: Kind::Integer,
        check: at_least_two,
    },
    KeySpec {
        name: "tol",
        kind: Kind::Number,
        check: positive,
    },
];

fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{}' is not a number", s.trim()))
    };
    match kind {
        Kind::Number => number(raw).map(Value::Number),
        Kind::Integer => raw
            .trim()
            .parse::<usize>()
            .map(Value::Integer)
            .map_err(|_| format!("'{}' is not a non-negative integer", raw.trim())),
        Kind::List => raw
            .split(',')
            .map(number)
            .collect::<Result<Vec<_>, _>>()
            .map(Value::List),
        Kind::Text => Ok(Value::Text(raw.trim().to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    params: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    pub fn number(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).map_or(default, num)
    }

    pub fn integer(&self, key: &str, default: usize) -> usize {
        match self.params.get(key) {
            Some(Value::Integer(i)) => *i,
            _ => default,
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        match self.params.get(key) {
            Some(Value::List(v)) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self, key: &str, default: &str) -> String {
        match self.params.get(key) {
            Some(Value::Text(s)) => s.clone(),
            _ => default.to_string(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(|k| k.as_str())
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    parse_config_with(text, None)
}

/// Parses `text`; `command` is used when the file does not name one and must agree when it does.
pub fn parse_config_with(
    text: &str,
    command: Option<Command>,
) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut params = BTreeMap::new();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::Parse {
                line,
                message: format!("expected 'key = value', found '{content}'"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            errors.push(ConfigError::Parse {
                line,
                message: "empty key or value".into(),
            });
            continue;
        }
        let Some(spec) = KEYS.iter().find(|s| s.name == key) else {
            errors.push(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
            continue;
        };
        if let Some(first) = lines.get(key) {
            errors.push(ConfigError::Parse {
                line,
                message: format!("'{key}' already set on line {first}"),
            });
            continue;
        }
        match parse_value(spec.kind, value) {
            Err(message) => errors.push(ConfigError::Parse {
                line,
                message: format!("{key}: {message}"),
            }),
            Ok(v) => {
                if let Err(message) = (spec.check)(&v) {
                    errors.push(ConfigError::Validation {
                        line: Some(line),
                        key: key.to_string(),
                        message,
                    });
                }
                lines.insert(key.to_string(), line);
                params.insert(key.to_string(), v);
            }
        }
    }

    let named = match params.get("command") {
        Some(Value::Text(s)) => s.parse::<Command>().ok(),
        _ => None,
    };
    let command = match (named, command) {
        (Some(a), Some(b)) if a != b => {
            errors.push(ConfigError::Validation {
                line: lines.get("command").copied(),
                key: "command".into(),
                message: format!("config names '{a}' but '{b}' was requested"),
            });
            None
        }
        (Some(a), _) => Some(a),
        (None, b) => b,
    };
    match command {
        None if !params.contains_key("command") => errors.push(ConfigError::Validation {
            line: None,
            key: "command".into(),
            message: "missing".into(),
        }),
        Some(cmd) => {
            for key in cmd.required() {
                if !params.contains_key(*key) && !(*key == "t" && params.contains_key("t_grid")) {
                    errors.push(ConfigError::Validation {
                        line: None,
                        key: key.to_string(),
                        message: format!("required by {cmd}"),
                    });
                }
            }
            if cmd == Command::MlfEval
                && !params.contains_key("z")
                && !params.contains_key("z_grid")
            {
                errors.push(ConfigError::Validation {
                    line: None,
                    key: "z".into(),
                    message: "mlf-eval needs z or z_grid".into(),
                });
            }
        }
        None => {}
    }
    if params.get("symbol") == Some(&Value::Text("custom".into()))
        && !params.contains_key("coefficients")
    {
        errors.push(ConfigError::Validation {
            line: lines.get("symbol").copied(),
            key: "coefficients".into(),
            message: "required by symbol = custom".into(),
        });
    }

    match (errors.is_empty(), command) {
        (true, Some(command)) => Ok(ExperimentConfig { command, params }),
        _ => Err(errors),
    }
}
