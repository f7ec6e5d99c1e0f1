//! Line-oriented experiment configuration.
//!
//! A config file is a sequence of `[section]` headers followed by
//! `key = value` lines. Blank lines and lines starting with `#` are
//! ignored. Recognized sections are `[map]`, `[potential]`, `[run]` and
//! `[output]`. Unknown sections, unknown keys, duplicate keys and
//! malformed values are hard errors: a misspelled key must never fall
//! back silently to a default.
//!
//! The effective configuration (operation name, master seed, and the
//! `[map]`/`[potential]`/`[run]` parameters) is re-serialized in a
//! canonical order and hashed with FNV-1a; the hash is embedded in every
//! output file so results can be traced back to the exact parameters that
//! produced them. The `[output]` section and command-line output paths do
//! not enter the hash: where a result is written must not change its
//! identity.

use ergolab::dynamics::{misiurewicz_a0, MapSystem, PhasePoint};
use ergolab::numeric::fnv1a64;
use ergolab::potentials::{
    make_bump_pair, Analytic, BumpFn, BumpRegion, BumpShape, Potential, WordPrefixTable,
};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Master seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 424_242;

/// A configuration or command-line mistake; reported on stderr and mapped
/// to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

const SECTIONS: [&str; 4] = ["map", "potential", "run", "output"];

/// One parsed section: keys in a sorted map, each with its value and the
/// line number it came from (for error messages).
#[derive(Debug, Clone, Default)]
pub struct Bag {
    section: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl Bag {
    fn new(section: &str) -> Bag {
        Bag {
            section: section.to_string(),
            entries: BTreeMap::new(),
        }
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<(), UsageError> {
        if self
            .entries
            .insert(key.to_string(), (value.to_string(), line))
            .is_some()
        {
            return Err(usage(format!(
                "duplicate key `{key}` in [{}] (line {line})",
                self.section
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub fn require(&mut self, key: &str) -> Result<String, UsageError> {
        self.take(key).ok_or_else(|| {
            usage(format!(
                "missing required key `{key}` in [{}]",
                self.section
            ))
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T, UsageError> {
        value.parse::<T>().map_err(|_| {
            usage(format!(
                "invalid value `{value}` for `{key}` in [{}]",
                self.section
            ))
        })
    }

    pub fn take_parsed<T: std::str::FromStr>(
        &mut self,
        key: &str,
    ) -> Result<Option<T>, UsageError> {
        match self.take(key) {
            Some(v) => Ok(Some(self.parse(key, &v)?)),
            None => Ok(None),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, UsageError> {
        let v = self.require(key)?;
        self.parse(key, &v)
    }

    pub fn take_list<T: std::str::FromStr>(
        &mut self,
        key: &str,
    ) -> Result<Option<Vec<T>>, UsageError> {
        match self.take(key) {
            Some(v) => {
                let mut out = Vec::new();
                for piece in v.split(',') {
                    out.push(self.parse(key, piece.trim())?);
                }
                Ok(Some(out))
            }
            None => Ok(None),
        }
    }

    pub fn require_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>, UsageError> {
        self.take_list(key)?.ok_or_else(|| {
            usage(format!(
                "missing required key `{key}` in [{}]",
                self.section
            ))
        })
    }

    /// Error out on any key nobody consumed.
    pub fn finish(self, context: &str) -> Result<(), UsageError> {
        let Bag { section, entries } = self;
        if let Some((key, (_, line))) = entries.into_iter().next() {
            return Err(usage(format!(
                "unknown key `{key}` in [{section}] (line {line}): not used by {context}"
            )));
        }
        Ok(())
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Bag>, UsageError> {
    let mut sections: BTreeMap<String, Bag> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| usage(format!("malformed section header (line {line_no})")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(usage(format!(
                    "unknown section [{name}] (line {line_no}); expected one of [map], [potential], [run], [output]"
                )));
            }
            if sections.contains_key(name) {
                return Err(usage(format!(
                    "duplicate section [{name}] (line {line_no})"
                )));
            }
            sections.insert(name.to_string(), Bag::new(name));
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "expected `key = value` or `[section]` (line {line_no}): `{line}`"
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(usage(format!(
                "empty key or value (line {line_no}): `{line}`"
            )));
        }
        let Some(section) = &current else {
            return Err(usage(format!(
                "`{key}` appears before any [section] header (line {line_no})"
            )));
        };
        sections
            .get_mut(section)
            .expect("current section exists")
            .insert(key, value, line_no)?;
    }
    Ok(sections)
}

/// Fully resolved experiment parameters for one invocation.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub operation: String,
    pub master_seed: u64,
    pub map: Option<MapSystem>,
    pub potential: Option<Potential>,
    /// Remaining `[run]` keys; the operation planner consumes them.
    pub run: Bag,
    pub out_dir: Option<PathBuf>,
    /// FNV-1a hash of the canonical serialization.
    pub hash: u64,
    pub canonical: String,
}

/// Canonical text: operation and seed first, then each present section in
/// fixed order with keys sorted, minus `[output]` and the already-hoisted
/// `seed`/`operation` keys.
fn canonical_text(
    operation: &str,
    master_seed: u64,
    sections: &BTreeMap<String, Bag>,
) -> String {
    let mut out = format!("operation = {operation}\nseed = {master_seed}\n");
    for name in ["map", "potential", "run"] {
        let Some(bag) = sections.get(name) else {
            continue;
        };
        out.push_str(&format!("[{name}]\n"));
        for (key, (value, _)) in &bag.entries {
            if name == "run" && (key == "seed" || key == "operation") {
                continue;
            }
            out.push_str(&format!("{key} = {value}\n"));
        }
    }
    out
}

fn build_map(bag: &mut Bag) -> Result<MapSystem, UsageError> {
    let kind = bag.require("kind")?;
    let built = match kind.as_str() {
        "circle_times_d" => MapSystem::circle_times_d(bag.require_parsed::<u32>("d")?),
        "quadratic" => MapSystem::quadratic(take_a0(bag)?),
        "viana" => {
            let d = bag.require_parsed::<u32>("d")?;
            let a0 = take_a0(bag)?;
            let alpha = bag.require_parsed::<f64>("alpha")?;
            MapSystem::viana(d, a0, alpha)
        }
        "full_shift" => MapSystem::full_shift(bag.require_parsed::<u32>("k")?),
        other => {
            return Err(usage(format!(
                "unknown map kind `{other}`; expected circle_times_d, quadratic, viana or full_shift"
            )))
        }
    };
    built.map_err(|e| usage(format!("invalid [map]: {e}")))
}

/// `a0 = misiurewicz` selects the preperiodic parameter; anything else must
/// parse as a number.
fn take_a0(bag: &mut Bag) -> Result<f64, UsageError> {
    let raw = bag.require("a0")?;
    if raw == "misiurewicz" {
        Ok(misiurewicz_a0())
    } else {
        raw.parse::<f64>()
            .map_err(|_| usage(format!("invalid value `{raw}` for `a0` in [map]")))
    }
}

fn build_potential(
    bag: &mut Bag,
    map: Option<&MapSystem>,
) -> Result<Potential, UsageError> {
    let kind = bag.require("kind")?;
    let base = match kind.as_str() {
        "constant" => Potential::Constant(bag.require_parsed::<f64>("value")?),
        "cos_theta" => Potential::Analytic(Analytic::CosTheta {
            t: bag.require_parsed::<f64>("t")?,
        }),
        "linear_x" => Potential::Analytic(Analytic::LinearX {
            t: bag.require_parsed::<f64>("t")?,
        }),
        "bump_pair" => {
            let map = map.ok_or_else(|| {
                usage("potential kind `bump_pair` requires a [map] section")
            })?;
            let shape = match bag.take("shape").as_deref() {
                None | Some("sine_squared") => BumpShape::SineSquared,
                Some("tent") => BumpShape::Tent,
                Some(other) => {
                    return Err(usage(format!(
                        "unknown bump shape `{other}`; expected sine_squared or tent"
                    )))
                }
            };
            let height = bag.require_parsed::<f64>("height")?;
            let region = if matches!(map, MapSystem::Viana(_)) {
                BumpRegion::Band {
                    theta_lo: bag.take_parsed::<f64>("theta_lo")?.unwrap_or(0.0),
                    theta_hi: bag.take_parsed::<f64>("theta_hi")?.unwrap_or(1.0),
                    x_lo: bag.require_parsed::<f64>("x_lo")?,
                    x_hi: bag.require_parsed::<f64>("x_hi")?,
                }
            } else {
                BumpRegion::Interval {
                    lo: bag.require_parsed::<f64>("lo")?,
                    hi: bag.require_parsed::<f64>("hi")?,
                }
            };
            make_bump_pair(map, region, BumpFn { shape, height })
                .map_err(|e| usage(format!("invalid [potential]: {e}")))?
        }
        "word_prefix" => {
            let Some(MapSystem::FullShift { k }) = map else {
                return Err(usage(
                    "potential kind `word_prefix` requires a full_shift [map]",
                ));
            };
            let prefix_len = bag.require_parsed::<usize>("prefix_len")?;
            let values = bag.require_list::<f64>("values")?;
            let table = WordPrefixTable::new(*k, prefix_len, values)
                .map_err(|e| usage(format!("invalid [potential]: {e}")))?;
            Potential::WordPrefix(table)
        }
        other => {
            return Err(usage(format!(
                "unknown potential kind `{other}`; expected constant, cos_theta, linear_x, bump_pair or word_prefix"
            )))
        }
    };
    Ok(match bag.take_parsed::<f64>("offset")? {
        Some(c) => base.offset(c),
        None => base,
    })
}

/// Parse config text (possibly absent) into a resolved configuration.
///
/// Seed precedence: `--seed` flag, then `[run] seed`, then the fixed
/// default. Output directory from `[output] dir` only; the command line
/// and environment override it later.
pub fn load(
    operation: &str,
    config_text: Option<&str>,
    seed_flag: Option<u64>,
) -> Result<ExperimentConfig, UsageError> {
    let mut sections = parse_sections(config_text.unwrap_or(""))?;

    if let Some(run) = sections.get_mut("run") {
        if let Some(op) = run.entries.get("operation") {
            if op.0 != operation {
                return Err(usage(format!(
                    "config names operation `{}` but the command line asked for `{operation}`",
                    op.0
                )));
            }
        }
    }

    let config_seed = match sections.get_mut("run") {
        Some(run) => {
            let raw = run.entries.get("seed").cloned();
            match raw {
                Some((v, _)) => Some(
                    v.parse::<u64>()
                        .map_err(|_| usage(format!("invalid value `{v}` for `seed` in [run]")))?,
                ),
                None => None,
            }
        }
        None => None,
    };
    let master_seed = seed_flag.or(config_seed).unwrap_or(DEFAULT_SEED);

    let canonical = canonical_text(operation, master_seed, &sections);
    let hash = fnv1a64(canonical.as_bytes());

    let map = match sections.remove("map") {
        Some(mut bag) => {
            let map = build_map(&mut bag)?;
            bag.finish(&format!("map kind `{}`", map.describe()))?;
            Some(map)
        }
        None => None,
    };

    let potential = match sections.remove("potential") {
        Some(mut bag) => {
            let phi = build_potential(&mut bag, map.as_ref())?;
            bag.finish(&format!("potential kind `{}`", phi.describe()))?;
            Some(phi)
        }
        None => None,
    };

    let run = match sections.remove("run") {
        Some(mut bag) => {
            bag.take("seed");
            bag.take("operation");
            bag
        }
        None => Bag::new("run"),
    };

    let out_dir = match sections.remove("output") {
        Some(mut bag) => {
            let dir = bag.take("dir").map(PathBuf::from);
            bag.finish("the [output] section (only `dir` is recognized)")?;
            dir
        }
        None => None,
    };

    Ok(ExperimentConfig {
        operation: operation.to_string(),
        master_seed,
        map,
        potential,
        run,
        out_dir,
        hash,
        canonical,
    })
}

/// Build the starting phase point for single-orbit operations from the
/// keys appropriate to the map family: `theta0` on the circle, `x0` on the
/// interval, both on the cylinder, and a digit string `word` on shifts.
pub fn start_point(bag: &mut Bag, map: &MapSystem) -> Result<PhasePoint, UsageError> {
    match map {
        MapSystem::CircleTimesD { .. } => {
            Ok(PhasePoint::circle(bag.require_parsed::<f64>("theta0")?))
        }
        MapSystem::Quadratic { .. } => {
            Ok(PhasePoint::interval(bag.require_parsed::<f64>("x0")?))
        }
        MapSystem::Viana(_) => Ok(PhasePoint::cylinder(
            bag.require_parsed::<f64>("theta0")?,
            bag.require_parsed::<f64>("x0")?,
        )),
        MapSystem::FullShift { k } => {
            let word = bag.require("word")?;
            let symbols = digits_of(&word)?;
            PhasePoint::word(*k, &symbols)
                .map_err(|e| usage(format!("invalid `word` in [run]: {e}")))
        }
    }
}

/// Parse a digit string like `0110` into symbols; alphabet bounds are
/// checked by the word constructor.
pub fn digits_of(word: &str) -> Result<Vec<u8>, UsageError> {
    word.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| usage(format!("`{c}` is not a digit in word `{word}`")))
        })
        .collect()
}
