//! Deterministic synthetic datasets in the LogHub structured-CSV layout.
//!
//! Every record carries two templates: one with `<*>` wildcards (the
//! general-mode source format) and one with ten-category labels. Real
//! LogHub files can be used instead wherever a path is accepted.

mod catalogs;
mod categories;
mod shapes;

use std::io;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

pub use catalogs::{catalog, SYSTEMS};
pub use categories::category_dataset;
pub use shapes::{default_category, generate, Category};

/// Records per LogHub dataset.
pub const LOGHUB_SIZE: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Annotation {
    /// Variables written as `<*>`.
    General,
    /// Variables written as category labels such as `[OID]`.
    Categories,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureRecord {
    pub line_id: u64,
    pub content: String,
    /// 1-based index into the generating catalog, as `E<n>`.
    pub event_id: String,
    pub general_template: String,
    pub category_template: String,
}

impl FixtureRecord {
    pub fn template(&self, annotation: Annotation) -> &str {
        match annotation {
            Annotation::General => &self.general_template,
            Annotation::Categories => &self.category_template,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<FixtureRecord>,
}

impl Dataset {
    /// `LineId,Content,EventId,EventTemplate` with a header row.
    pub fn to_csv(&self, annotation: Annotation) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["LineId", "Content", "EventId", "EventTemplate"])
            .expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.line_id.to_string().as_str(),
                &r.content,
                &r.event_id,
                r.template(annotation),
            ])
            .expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("fixture text is UTF-8")
    }

    pub fn write_csv(&self, path: &Path, annotation: Annotation) -> io::Result<()> {
        std::fs::write(path, self.to_csv(annotation))
    }

    /// File name used for this dataset inside a dataset directory.
    pub fn file_name(&self) -> String {
        format!("{}_2k.log_structured.csv", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Part {
    Static(String),
    Slot {
        generator: String,
        category: Category,
    },
}

/// Splits a catalog template into static text and `{generator[:CAT]}` slots.
pub(crate) fn parse_template(template: &str) -> Vec<Part> {
    let mut parts = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            parts.push(Part::Static(rest[..open].to_string()));
        }
        let close = rest[open..].find('}').expect("unclosed slot") + open;
        let spec = &rest[open + 1..close];
        let (generator, category) = match spec.split_once(':') {
            Some((g, c)) => (g, Category::from_code(c).expect("known category code")),
            None => (spec, default_category(spec).expect("known generator")),
        };
        parts.push(Part::Slot {
            generator: generator.to_string(),
            category,
        });
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        parts.push(Part::Static(rest.to_string()));
    }
    parts
}

pub(crate) fn render<R: Rng + ?Sized>(
    parts: &[Part],
    line_id: u64,
    event_id: String,
    rng: &mut R,
) -> FixtureRecord {
    let mut content = String::new();
    let mut general = String::new();
    let mut categories = String::new();
    for p in parts {
        match p {
            Part::Static(s) => {
                content.push_str(s);
                general.push_str(s);
                categories.push_str(s);
            }
            Part::Slot {
                generator,
                category,
            } => {
                content.push_str(&generate(generator, rng));
                general.push_str("<*>");
                categories.push_str(category.label());
            }
        }
    }
    FixtureRecord {
        line_id,
        content,
        event_id,
        general_template: general,
        category_template: categories,
    }
}

/// `n` records of a LogHub-style system. Template frequencies follow a
/// 1/rank law over the catalog order. `None` for an unknown system name.
pub fn loghub_dataset(system: &str, n: usize, seed: u64) -> Option<Dataset> {
    let catalog = catalog(system)?;
    let parsed: Vec<Vec<Part>> = catalog.iter().map(|t| parse_template(t)).collect();
    let weights =
        WeightedIndex::new((1..=catalog.len()).map(|r| 1.0 / r as f64)).expect("positive weights");
    let mut rng = SplitMix64::seed_from_u64(seed ^ name_hash(system));
    let records = (0..n)
        .map(|i| {
            let t = rng.sample(&weights);
            render(&parsed[t], i as u64 + 1, format!("E{}", t + 1), &mut rng)
        })
        .collect();
    Some(Dataset {
        name: system.to_string(),
        records,
    })
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a, so each system gets its own stream for the same seed.
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Writes every listed system as `<name>_2k.log_structured.csv` into `dir`
/// and returns the paths in the same order.
pub fn write_loghub_dir(
    dir: &Path,
    systems: &[&str],
    n: usize,
    seed: u64,
    annotation: Annotation,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    systems
        .iter()
        .map(|s| {
            let ds = loghub_dataset(s, n, seed).ok_or_else(|| {
                io::Error::new(io::ErrorKind::InvalidInput, format!("unknown system {s}"))
            })?;
            let path = dir.join(ds.file_name());
            ds.write_csv(&path, annotation)?;
            Ok(path)
        })
        .collect()
}
