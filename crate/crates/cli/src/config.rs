//! Experiment configuration: an INI-style grammar with typed values.
//!
//! ```text
//! # comment
//! [system]
//! id = pendulum
//! sigma = [0, 1e-10, 1e-10, 0]
//!
//! [analysis]
//! y0 = [1, 0; -1, 0.5]
//! ```
//!
//! Values are numbers, booleans, bare or quoted strings, vectors `[a, b]`
//! and matrices whose rows are separated by `;`. Every problem found is
//! reported with its line number; parsing never stops at the first one.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use yde_core::noise::FbmMethod;
use yde_core::paths::format_float;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Words(Vec<String>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Vector(_) => "vector",
            Value::Matrix(_) => "matrix",
            Value::Words(_) => "list of names",
        }
    }
}

fn parse_value(raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err("missing value".into());
    }
    if let Some(inner) = raw.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("unterminated vector")?.trim();
        if inner.is_empty() {
            return Ok(Value::Vector(Vec::new()));
        }
        let rows: Vec<&str> = inner.split(';').collect();
        let mut parsed = Vec::with_capacity(rows.len());
        for row in &rows {
            let items: Vec<&str> = row.split(',').map(str::trim).collect();
            match items.iter().map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>() {
                Ok(v) => parsed.push(v),
                Err(_) if rows.len() == 1 && items.iter().all(|s| is_word(s)) => {
                    return Ok(Value::Words(items.iter().map(|s| s.to_string()).collect()));
                }
                Err(_) => return Err(format!("bad number in `{}`", row.trim())),
            }
        }
        if rows.len() == 1 {
            return Ok(Value::Vector(parsed.pop().unwrap_or_default()));
        }
        if parsed.iter().any(|r| r.len() != parsed[0].len()) {
            return Err("matrix rows differ in length".into());
        }
        return Ok(Value::Matrix(parsed));
    }
    if let Some(inner) = raw.strip_prefix('"') {
        return inner
            .strip_suffix('"')
            .map(|s| Value::Str(s.to_string()))
            .ok_or_else(|| "unterminated string".into());
    }
    match raw {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Ok(Value::Num(v));
    }
    if is_word(raw) {
        return Ok(Value::Str(raw.to_string()));
    }
    Err(format!("cannot parse value `{raw}`"))
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./".contains(c))
}

/// Systems the CLI can build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    /// The damped pendulum with four noise channels.
    Pendulum,
    /// `dy = a y dt + c y dx`, scalar.
    ScalarLinear,
    /// `dy = −λ y dt + diag(σ) dx`.
    Additive,
    /// `dy_i = a_i y_i dt + c_i y_i dx_i`.
    DiagonalLinear,
}

impl SystemId {
    pub const ALL: [SystemId; 4] = [SystemId::Pendulum, SystemId::ScalarLinear, SystemId::Additive, SystemId::DiagonalLinear];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Pendulum => "pendulum",
            SystemId::ScalarLinear => "scalar-linear",
            SystemId::Additive => "additive",
            SystemId::DiagonalLinear => "diagonal-linear",
        }
    }

    fn parse(s: &str) -> Option<SystemId> {
        SystemId::ALL.into_iter().find(|id| id.name() == s)
    }

    /// Keys accepted in `[system]` besides `id`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            SystemId::Pendulum => &["m", "b", "l_bar", "k", "g_grav", "sigma"],
            SystemId::ScalarLinear => &["a", "c"],
            SystemId::Additive => &["lambda", "sigma"],
            SystemId::DiagonalLinear => &["a", "c"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec {
    pub id: SystemId,
    pub m: f64,
    pub b: f64,
    pub l_bar: f64,
    pub k: f64,
    pub g_grav: f64,
    /// Pendulum noise intensities or additive amplitudes.
    pub sigma: Vec<f64>,
    /// Drift coefficients (`scalar-linear` uses the first entry).
    pub a: Vec<f64>,
    /// Multiplicative noise coefficients.
    pub c: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// One Hurst exponent, or one per noise component.
    pub hurst: Vec<f64>,
    pub start: f64,
    pub end: f64,
    pub step: f64,
    pub seed: u64,
    pub method: FbmMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSpec {
    pub p: f64,
    pub delta: f64,
    pub horizon: usize,
    pub realizations: usize,
    pub mesh: f64,
    pub gamma_samples: usize,
    pub tolerance: f64,
    pub cases: usize,
    pub levels: u32,
    pub y0: Vec<Vec<f64>>,
    pub cg_scales: Vec<f64>,
    pub r: f64,
    pub epsilon: f64,
    /// `0` uses every available core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: String,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub noise: NoiseSpec,
    pub analysis: AnalysisSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemSpec {
                id: SystemId::Pendulum,
                m: 1.0,
                b: 1.2,
                l_bar: 50.0,
                k: 1.0,
                g_grav: 9.8,
                sigma: vec![1e-10, 1e-10, 1e-10, 0.0],
                a: vec![-1.0],
                c: vec![0.1],
                lambda: 1.0,
            },
            noise: NoiseSpec {
                hurst: vec![0.75],
                start: -20.0,
                end: 20.0,
                step: 1.0 / 64.0,
                seed: 0,
                method: FbmMethod::CirculantEmbedding,
            },
            analysis: AnalysisSpec {
                p: 1.5,
                delta: 0.1,
                horizon: 40,
                realizations: 8,
                mesh: 1.0 / 64.0,
                gamma_samples: 200,
                tolerance: 1e-9,
                cases: 100,
                levels: 12,
                y0: vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.5, -1.0]],
                cg_scales: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
                r: 10.0,
                epsilon: 0.01,
                workers: 0,
            },
            output: OutputSpec { dir: "out".into(), formats: vec!["csv".into(), "json".into()] },
        }
    }
}

const SECTIONS: [&str; 4] = ["system", "noise", "analysis", "output"];

fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "system" => &["id", "m", "b", "l_bar", "k", "g_grav", "sigma", "a", "c", "lambda"],
        "noise" => &["hurst", "start", "end", "step", "seed", "method"],
        "analysis" => &[
            "p", "delta", "horizon", "realizations", "mesh", "gamma_samples", "tolerance", "cases", "levels", "y0",
            "cg_scales", "r", "epsilon", "workers",
        ],
        "output" => &["dir", "formats"],
        _ => &[],
    }
}

struct Entry {
    value: Value,
    line: usize,
}

struct Reader<'a> {
    entries: &'a BTreeMap<(String, String), Entry>,
    diags: Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn mismatch(&mut self, e: &Entry, section: &str, key: &str, want: &str) {
        self.diags.push(Diagnostic {
            line: Some(e.line),
            message: format!("{section}.{key}: expected {want}, found {}", e.value.kind()),
        });
    }

    fn num(&mut self, section: &str, key: &str, slot: &mut f64) {
        if let Some(e) = self.get(section, key) {
            match e.value {
                Value::Num(v) => *slot = v,
                _ => self.mismatch(e, section, key, "a number"),
            }
        }
    }

    fn count(&mut self, section: &str, key: &str, slot: &mut usize) {
        if let Some(e) = self.get(section, key) {
            match e.value {
                Value::Num(v) if v >= 0.0 && v.fract() == 0.0 && v < 9.007e15 => *slot = v as usize,
                _ => self.mismatch(e, section, key, "a nonnegative integer"),
            }
        }
    }

    fn vector(&mut self, section: &str, key: &str, slot: &mut Vec<f64>) {
        if let Some(e) = self.get(section, key) {
            match &e.value {
                Value::Vector(v) => *slot = v.clone(),
                Value::Num(v) => *slot = vec![*v],
                _ => self.mismatch(e, section, key, "a vector"),
            }
        }
    }

    fn matrix(&mut self, section: &str, key: &str, slot: &mut Vec<Vec<f64>>) {
        if let Some(e) = self.get(section, key) {
            match &e.value {
                Value::Matrix(m) => *slot = m.clone(),
                Value::Vector(v) => *slot = vec![v.clone()],
                _ => self.mismatch(e, section, key, "a matrix"),
            }
        }
    }

    fn string(&mut self, section: &str, key: &str, slot: &mut String) {
        if let Some(e) = self.get(section, key) {
            match &e.value {
                Value::Str(s) => *slot = s.clone(),
                _ => self.mismatch(e, section, key, "a string"),
            }
        }
    }

    fn words(&mut self, section: &str, key: &str, slot: &mut Vec<String>) {
        if let Some(e) = self.get(section, key) {
            match &e.value {
                Value::Words(w) => *slot = w.clone(),
                Value::Str(s) => *slot = vec![s.clone()],
                Value::Vector(v) if v.is_empty() => slot.clear(),
                _ => self.mismatch(e, section, key, "a list of names"),
            }
        }
    }

    fn invalid(&mut self, section: &str, key: &str, message: String) {
        let line = self.get(section, key).map(|e| e.line);
        self.diags.push(Diagnostic { line, message: format!("{section}.{key}: {message}") });
    }
}

/// Parses and validates `text`, returning every diagnostic on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut entries: BTreeMap<(String, String), Entry> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                diags.push(Diagnostic { line: Some(line), message: "unterminated section header".into() });
                continue;
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                diags.push(Diagnostic { line: Some(line), message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, raw_value)) = body.split_once('=') else {
            diags.push(Diagnostic { line: Some(line), message: format!("expected `key = value`, found `{body}`") });
            continue;
        };
        let key = key.trim().to_string();
        let Some(sec) = section.clone() else {
            diags.push(Diagnostic { line: Some(line), message: format!("key `{key}` appears before any section") });
            continue;
        };
        if !SECTIONS.contains(&sec.as_str()) {
            continue;
        }
        if !section_keys(&sec).contains(&key.as_str()) {
            diags.push(Diagnostic { line: Some(line), message: format!("unknown key `{key}` in [{sec}]") });
            continue;
        }
        let value = match parse_value(raw_value) {
            Ok(v) => v,
            Err(m) => {
                diags.push(Diagnostic { line: Some(line), message: format!("{sec}.{key}: {m}") });
                continue;
            }
        };
        if let Some(prev) = entries.get(&(sec.clone(), key.clone())) {
            diags.push(Diagnostic {
                line: Some(line),
                message: format!("duplicate key `{key}` in [{sec}] at lines {} and {line}", prev.line),
            });
            continue;
        }
        entries.insert((sec, key), Entry { value, line });
    }

    let mut cfg = ExperimentConfig::default();
    let mut r = Reader { entries: &entries, diags };
    match r.get("system", "id") {
        None => r.diags.push(Diagnostic { line: None, message: "system.id is required".into() }),
        Some(e) => match &e.value {
            Value::Str(s) => match SystemId::parse(s) {
                Some(id) => cfg.system.id = id,
                None => {
                    let known: Vec<&str> = SystemId::ALL.iter().map(|i| i.name()).collect();
                    r.invalid("system", "id", format!("unknown system `{s}` (known: {})", known.join(", ")));
                }
            },
            _ => r.mismatch(e, "system", "id", "a name"),
        },
    }
    apply_system_defaults(&mut cfg.system);
    for ((sec, key), e) in &entries {
        if sec == "system" && key != "id" && !cfg.system.id.keys().contains(&key.as_str()) {
            r.diags.push(Diagnostic {
                line: Some(e.line),
                message: format!("key `{key}` does not apply to system `{}`", cfg.system.id.name()),
            });
        }
    }
    {
        let s = &mut cfg.system;
        r.num("system", "m", &mut s.m);
        r.num("system", "b", &mut s.b);
        r.num("system", "l_bar", &mut s.l_bar);
        r.num("system", "k", &mut s.k);
        r.num("system", "g_grav", &mut s.g_grav);
        r.num("system", "lambda", &mut s.lambda);
        r.vector("system", "sigma", &mut s.sigma);
        r.vector("system", "a", &mut s.a);
        r.vector("system", "c", &mut s.c);
    }
    {
        let n = &mut cfg.noise;
        r.vector("noise", "hurst", &mut n.hurst);
        r.num("noise", "start", &mut n.start);
        r.num("noise", "end", &mut n.end);
        r.num("noise", "step", &mut n.step);
        if let Some(e) = r.get("noise", "seed") {
            match &e.value {
                Value::Str(s) => match s.parse::<u64>() {
                    Ok(v) => n.seed = v,
                    Err(_) => r.invalid("noise", "seed", "expected an unsigned integer".into()),
                },
                _ => {
                    let mut v = 0usize;
                    r.count("noise", "seed", &mut v);
                    n.seed = v as u64;
                }
            }
        }
        let mut method = String::new();
        r.string("noise", "method", &mut method);
        match method.as_str() {
            "" => {}
            "circulant" | "circulant-embedding" | "davies-harte" => n.method = FbmMethod::CirculantEmbedding,
            "cholesky" => n.method = FbmMethod::Cholesky,
            other => r.invalid("noise", "method", format!("unknown method `{other}` (circulant, cholesky)")),
        }
    }
    {
        let a = &mut cfg.analysis;
        r.num("analysis", "p", &mut a.p);
        r.num("analysis", "delta", &mut a.delta);
        r.count("analysis", "horizon", &mut a.horizon);
        r.count("analysis", "realizations", &mut a.realizations);
        r.num("analysis", "mesh", &mut a.mesh);
        r.count("analysis", "gamma_samples", &mut a.gamma_samples);
        r.num("analysis", "tolerance", &mut a.tolerance);
        r.count("analysis", "cases", &mut a.cases);
        let mut levels = a.levels as usize;
        r.count("analysis", "levels", &mut levels);
        a.levels = levels.min(u32::MAX as usize) as u32;
        r.matrix("analysis", "y0", &mut a.y0);
        r.vector("analysis", "cg_scales", &mut a.cg_scales);
        r.num("analysis", "r", &mut a.r);
        r.num("analysis", "epsilon", &mut a.epsilon);
        r.count("analysis", "workers", &mut a.workers);
    }
    r.string("output", "dir", &mut cfg.output.dir);
    r.words("output", "formats", &mut cfg.output.formats);

    validate(&cfg, &mut r);
    if r.diags.is_empty() {
        Ok(cfg)
    } else {
        let mut d = r.diags;
        d.sort_by_key(|d| d.line.unwrap_or(0));
        Err(d)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Per-system defaults for the generic coefficient keys.
fn apply_system_defaults(s: &mut SystemSpec) {
    match s.id {
        SystemId::Pendulum => s.sigma = vec![1e-10, 1e-10, 1e-10, 0.0],
        SystemId::ScalarLinear => {
            s.a = vec![-1.0];
            s.c = vec![0.1];
        }
        SystemId::Additive => s.sigma = vec![0.5],
        SystemId::DiagonalLinear => {
            s.a = vec![-1.0, -2.0];
            s.c = vec![0.1, 0.1];
        }
    }
}

fn validate(cfg: &ExperimentConfig, r: &mut Reader<'_>) {
    let s = &cfg.system;
    match s.id {
        SystemId::Pendulum => {
            for (key, v) in [("m", s.m), ("b", s.b), ("l_bar", s.l_bar), ("k", s.k)] {
                if !(v > 0.0) {
                    r.invalid("system", key, format!("must be positive, got {v}"));
                }
            }
            if !(s.g_grav >= 0.0) {
                r.invalid("system", "g_grav", "must be nonnegative".into());
            }
            if s.sigma.len() != 4 {
                r.invalid("system", "sigma", format!("pendulum needs 4 intensities, got {}", s.sigma.len()));
            }
        }
        SystemId::ScalarLinear => {
            if s.a.len() != 1 || s.c.len() != 1 {
                r.invalid("system", "a", "scalar-linear takes one `a` and one `c`".into());
            }
        }
        SystemId::Additive => {
            if !(s.lambda > 0.0) {
                r.invalid("system", "lambda", "must be positive".into());
            }
            if s.sigma.is_empty() {
                r.invalid("system", "sigma", "needs at least one amplitude".into());
            }
        }
        SystemId::DiagonalLinear => {
            if s.a.is_empty() || s.a.len() != s.c.len() {
                r.invalid("system", "c", "`a` and `c` must be nonempty and of equal length".into());
            }
        }
    }
    if matches!(s.id, SystemId::Pendulum | SystemId::Additive) && s.sigma.iter().any(|v| !(*v >= 0.0)) {
        r.invalid("system", "sigma", "intensities must be nonnegative".into());
    }

    let n = &cfg.noise;
    if n.hurst.is_empty() || n.hurst.iter().any(|h| !(*h > 0.5 && *h < 1.0)) {
        r.invalid("noise", "hurst", "Hurst exponents must lie in (1/2, 1)".into());
    }
    if !(n.end > n.start) {
        r.invalid("noise", "end", format!("end {} must exceed start {}", n.end, n.start));
    }
    if !(n.step > 0.0) {
        r.invalid("noise", "step", "must be positive".into());
    }

    let a = &cfg.analysis;
    if !(a.p > 1.0 && a.p < 2.0) {
        r.invalid("analysis", "p", format!("must lie in (1, 2), got {}", a.p));
    }
    if !(0.0..1.0).contains(&a.delta) {
        r.invalid("analysis", "delta", format!("must lie in [0, 1), got {}", a.delta));
    }
    for (key, v) in [("mesh", a.mesh), ("tolerance", a.tolerance), ("r", a.r), ("epsilon", a.epsilon)] {
        if !(v > 0.0 && v.is_finite()) {
            r.invalid("analysis", key, format!("must be positive, got {v}"));
        }
    }
    for (key, v) in [("horizon", a.horizon), ("realizations", a.realizations), ("cases", a.cases), ("gamma_samples", a.gamma_samples)] {
        if v == 0 {
            r.invalid("analysis", key, "must be positive".into());
        }
    }
    if a.levels == 0 || a.levels > 60 {
        r.invalid("analysis", "levels", "must lie in 1..=60".into());
    }
    if a.y0.is_empty() {
        r.invalid("analysis", "y0", "needs at least one initial value".into());
    }
    if a.cg_scales.iter().any(|v| !(*v >= 0.0)) {
        r.invalid("analysis", "cg_scales", "scales must be nonnegative".into());
    }
    if cfg.output.dir.is_empty() {
        r.invalid("output", "dir", "must not be empty".into());
    }
    if let Some(f) = cfg.output.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
        r.invalid("output", "formats", format!("unknown format `{f}` (csv, json)"));
    }
}

fn vec_text(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format_float(*x)).collect();
    format!("[{}]", items.join(", "))
}

impl ExperimentConfig {
    /// Every field, in a fixed order, in the input grammar.
    pub fn dump(&self) -> String {
        let mut o = String::new();
        let s = &self.system;
        let _ = writeln!(o, "[system]\nid = {}", s.id.name());
        match s.id {
            SystemId::Pendulum => {
                for (k, v) in [("m", s.m), ("b", s.b), ("l_bar", s.l_bar), ("k", s.k), ("g_grav", s.g_grav)] {
                    let _ = writeln!(o, "{k} = {}", format_float(v));
                }
                let _ = writeln!(o, "sigma = {}", vec_text(&s.sigma));
            }
            SystemId::ScalarLinear | SystemId::DiagonalLinear => {
                let _ = writeln!(o, "a = {}\nc = {}", vec_text(&s.a), vec_text(&s.c));
            }
            SystemId::Additive => {
                let _ = writeln!(o, "lambda = {}\nsigma = {}", format_float(s.lambda), vec_text(&s.sigma));
            }
        }
        let n = &self.noise;
        let method = match n.method {
            FbmMethod::Cholesky => "cholesky",
            FbmMethod::CirculantEmbedding => "circulant",
        };
        let _ = writeln!(
            o,
            "\n[noise]\nhurst = {}\nstart = {}\nend = {}\nstep = {}\nseed = \"{}\"\nmethod = {method}",
            vec_text(&n.hurst),
            format_float(n.start),
            format_float(n.end),
            format_float(n.step),
            n.seed
        );
        let a = &self.analysis;
        let y0: Vec<String> = a
            .y0
            .iter()
            .map(|r| r.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(", "))
            .collect();
        let _ = writeln!(o, "\n[analysis]");
        for (k, v) in [("p", a.p), ("delta", a.delta), ("mesh", a.mesh), ("tolerance", a.tolerance), ("r", a.r), ("epsilon", a.epsilon)] {
            let _ = writeln!(o, "{k} = {}", format_float(v));
        }
        for (k, v) in [
            ("horizon", a.horizon),
            ("realizations", a.realizations),
            ("gamma_samples", a.gamma_samples),
            ("cases", a.cases),
            ("levels", a.levels as usize),
            ("workers", a.workers),
        ] {
            let _ = writeln!(o, "{k} = {v}");
        }
        let _ = writeln!(o, "y0 = [{}]\ncg_scales = {}", y0.join("; "), vec_text(&a.cg_scales));
        let _ = writeln!(o, "\n[output]\ndir = \"{}\"\nformats = [{}]", self.output.dir, self.output.formats.join(", "));
        o
    }

    /// Hurst exponent of each of `m` noise components.
    pub fn hurst_for(&self, m: usize) -> Result<Vec<f64>, String> {
        match self.noise.hurst.len() {
            1 => Ok(vec![self.noise.hurst[0]; m]),
            l if l == m => Ok(self.noise.hurst.clone()),
            l => Err(format!("noise.hurst has {l} entries, the system has {m} noise components")),
        }
    }
}
