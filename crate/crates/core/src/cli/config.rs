//! Run configuration: typed values, `key=value` files, and merging.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::analysis::Norm;
use crate::analytic::CaseName;
use crate::kernel::DEFAULT_RADIUS_POINTS;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Apply,
    Solve,
    Evolve,
    Constants,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Apply => "apply",
            Command::Solve => "solve",
            Command::Evolve => "evolve",
            Command::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precond {
    On,
    Off,
    Both,
}

impl Precond {
    pub fn variants(self) -> &'static [bool] {
        match self {
            Precond::On => &[true],
            Precond::Off => &[false],
            Precond::Both => &[true, false],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Full,
    LShape,
}

/// Everything one command needs. Lists (`alpha`, `m`) fan out into one CSV
/// row per combination.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: Vec<f64>,
    pub d: usize,
    pub m: Vec<usize>,
    pub domain: Domain,
    /// Same bounds on every axis; `None` uses the case's natural box.
    pub bounds: Option<(f64, f64)>,
    /// `None` picks a default per command and dimension.
    pub case: Option<CaseName>,
    pub nu: Option<Vec<u32>>,
    pub delta_points: usize,
    pub tol: f64,
    pub max_iters: Option<usize>,
    pub precond: Precond,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub steps: Option<usize>,
    pub seed: u64,
    pub richardson: bool,
    pub norm: Norm,
    pub repeats: usize,
    pub record: Option<usize>,
    pub out: Option<PathBuf>,
    pub field_out: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

/// Keys accepted in config files and (with `--` prefix) on the command line.
pub const KEYS: &[&str] = &[
    "alpha",
    "d",
    "m",
    "domain",
    "box",
    "case",
    "nu",
    "delta-points",
    "tol",
    "max-iters",
    "precond",
    "dt",
    "T",
    "steps",
    "seed",
    "richardson",
    "norm",
    "repeats",
    "record",
    "out",
    "field-out",
    "history",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("empty list for {key}")));
    }
    Ok(items)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "" | "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            alpha: vec![1.5],
            d: 1,
            m: vec![511],
            domain: Domain::Full,
            bounds: None,
            case: None,
            nu: None,
            delta_points: DEFAULT_RADIUS_POINTS,
            tol: 1e-9,
            max_iters: None,
            precond: Precond::On,
            dt: None,
            t_final: None,
            steps: None,
            seed: 0,
            richardson: false,
            norm: Norm::L2,
            repeats: 3,
            record: None,
            out: None,
            field_out: None,
            history: None,
        }
    }

    /// Sets one key; keys use the flag spelling, `_` and `-` interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "alpha" => self.alpha = parse_list("alpha", v)?,
            "d" => self.d = parse_num("d", v)?,
            "m" => self.m = parse_list("m", v)?,
            "domain" => {
                self.domain = match v.to_ascii_lowercase().replace('-', "").as_str() {
                    "full" | "box" => Domain::Full,
                    "lshape" | "l" => Domain::LShape,
                    _ => return Err(Error::Config(format!("unknown domain {v:?}; use full or lshape"))),
                }
            }
            "box" => {
                let b: Vec<f64> = parse_list("box", v)?;
                if b.len() != 2 {
                    return Err(Error::Config(format!("box takes lo,hi; got {v:?}")));
                }
                self.bounds = Some((b[0], b[1]));
            }
            "case" => self.case = Some(v.parse()?),
            "nu" => self.nu = Some(parse_list("nu", v)?),
            "delta-points" => self.delta_points = parse_num("delta-points", v)?,
            "tol" => self.tol = parse_num("tol", v)?,
            "max-iters" => self.max_iters = Some(parse_num("max-iters", v)?),
            "precond" => {
                self.precond = match v.to_ascii_lowercase().as_str() {
                    "on" | "1" | "true" | "yes" => Precond::On,
                    "off" | "0" | "false" | "no" => Precond::Off,
                    "both" => Precond::Both,
                    _ => return Err(Error::Config(format!("precond takes on, off or both; got {v:?}"))),
                }
            }
            "dt" => self.dt = Some(parse_num("dt", v)?),
            "T" | "t" | "t-final" => self.t_final = Some(parse_num("T", v)?),
            "steps" => self.steps = Some(parse_num("steps", v)?),
            "seed" => self.seed = parse_num("seed", v)?,
            "richardson" => self.richardson = parse_bool("richardson", v)?,
            "norm" => self.norm = v.parse()?,
            "repeats" => self.repeats = parse_num::<usize>("repeats", v)?.max(1),
            "record" => self.record = Some(parse_num("record", v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "field-out" => self.field_out = Some(PathBuf::from(v)),
            "history" => self.history = Some(PathBuf::from(v)),
            "command" => {
                if v != self.command.as_str() {
                    return Err(Error::Config(format!(
                        "config file is for {v:?}, running {:?}",
                        self.command.as_str()
                    )));
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Serializes to `key=value` lines that [`RunConfig::apply_kv`] reads back.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("command", self.command.as_str().into());
        kv("alpha", join(&self.alpha));
        kv("d", self.d.to_string());
        kv("m", join(&self.m));
        kv(
            "domain",
            match self.domain {
                Domain::Full => "full",
                Domain::LShape => "lshape",
            }
            .into(),
        );
        if let Some((lo, hi)) = self.bounds {
            kv("box", format!("{lo},{hi}"));
        }
        if let Some(c) = self.case {
            kv("case", c.to_string());
        }
        if let Some(nu) = &self.nu {
            kv("nu", join(nu));
        }
        kv("delta-points", self.delta_points.to_string());
        kv("tol", format!("{:e}", self.tol));
        if let Some(n) = self.max_iters {
            kv("max-iters", n.to_string());
        }
        kv(
            "precond",
            match self.precond {
                Precond::On => "on",
                Precond::Off => "off",
                Precond::Both => "both",
            }
            .into(),
        );
        if let Some(dt) = self.dt {
            kv("dt", format!("{dt:e}"));
        }
        if let Some(t) = self.t_final {
            kv("T", format!("{t:e}"));
        }
        if let Some(n) = self.steps {
            kv("steps", n.to_string());
        }
        kv("seed", self.seed.to_string());
        kv("richardson", self.richardson.to_string());
        kv("norm", self.norm.to_string());
        kv("repeats", self.repeats.to_string());
        if let Some(r) = self.record {
            kv("record", r.to_string());
        }
        for (k, p) in [("out", &self.out), ("field-out", &self.field_out), ("history", &self.history)] {
            if let Some(p) = p {
                kv(k, p.display().to_string());
            }
        }
        s
    }

    /// Case after applying the per-command default.
    pub fn case_name(&self) -> CaseName {
        self.case.unwrap_or(match (self.command, self.d) {
            (Command::Apply | Command::Solve, 1) => CaseName::Smooth1d,
            (Command::Apply, _) => CaseName::Bump,
            (Command::Evolve, _) => CaseName::ParabolicIc,
            _ => CaseName::Ones,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = RunConfig::new(Command::Solve);
        c.apply_kv(
            "# comment\nalpha=0.75,1.25\nd=2\nm=255\nbox=-1,1\ncase=ones\ntol=1e-6\nprecond=both\n\
             dt=0.001\nT=0.25\nseed=7\nrichardson=true\nnorm=inf\nout=/tmp/x.csv\n",
        )
        .unwrap();
        assert_eq!(c.alpha, vec![0.75, 1.25]);
        assert_eq!(c.bounds, Some((-1.0, 1.0)));
        assert_eq!(c.precond, Precond::Both);
        let mut back = RunConfig::new(Command::Solve);
        back.apply_kv(&c.to_kv()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_input_rejected() {
        let mut c = RunConfig::new(Command::Apply);
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("alpha", "x").is_err());
        assert!(c.set("box", "0,1,2").is_err());
        assert!(c.apply_kv("novalue\n").is_err());
        assert!(c.apply_kv("command=solve\n").is_err());
    }

    #[test]
    fn default_cases() {
        let mut c = RunConfig::new(Command::Apply);
        assert_eq!(c.case_name(), CaseName::Smooth1d);
        c.d = 2;
        assert_eq!(c.case_name(), CaseName::Bump);
        assert_eq!(RunConfig::new(Command::Evolve).case_name(), CaseName::ParabolicIc);
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("alpha", "1"),
            ("d", "2"),
            ("m", "7"),
            ("domain", "lshape"),
            ("box", "0,1"),
            ("case", "ones"),
            ("nu", "1,2"),
            ("delta-points", "5"),
            ("tol", "1e-3"),
            ("max-iters", "9"),
            ("precond", "off"),
            ("dt", "0.5"),
            ("T", "1"),
            ("steps", "2"),
            ("seed", "3"),
            ("richardson", "no"),
            ("norm", "2"),
            ("repeats", "1"),
            ("record", "4"),
            ("out", "a"),
            ("field-out", "b"),
            ("history", "c"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut c = RunConfig::new(Command::Evolve);
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            c.set(k, v).unwrap();
        }
    }
}
