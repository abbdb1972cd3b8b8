//! A many-template fixture for variable-aware parsing. Static words come
//! from a shared lowercase vocabulary; each category has its own value
//! shapes, so unseen templates are still parseable from seen parts.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::shapes::Category;
use crate::{render, Dataset, Part};

const STATIC_WORDS: &[&str] = &[
    "accepted",
    "acquired",
    "added",
    "allocated",
    "applied",
    "assigned",
    "attempt",
    "backup",
    "balancer",
    "block",
    "bound",
    "broadcast",
    "buffer",
    "cache",
    "called",
    "channel",
    "checkpoint",
    "cleanup",
    "client",
    "closed",
    "cluster",
    "commit",
    "completed",
    "config",
    "connection",
    "consumer",
    "container",
    "context",
    "created",
    "daemon",
    "deleted",
    "delivered",
    "detected",
    "device",
    "dispatch",
    "domain",
    "dropped",
    "election",
    "entry",
    "event",
    "executor",
    "expired",
    "exported",
    "failed",
    "fetch",
    "file",
    "finished",
    "flush",
    "for",
    "forwarded",
    "from",
    "handler",
    "heartbeat",
    "host",
    "in",
    "index",
    "initialized",
    "instance",
    "interface",
    "job",
    "joined",
    "kernel",
    "leader",
    "lease",
    "listener",
    "loaded",
    "lock",
    "manager",
    "mapped",
    "member",
    "memory",
    "message",
    "migrated",
    "mount",
    "moved",
    "network",
    "node",
    "notified",
    "of",
    "opened",
    "packet",
    "partition",
    "peer",
    "pending",
    "pool",
    "process",
    "producer",
    "queue",
    "queued",
    "read",
    "ready",
    "rebalance",
    "received",
    "record",
    "refreshed",
    "region",
    "registered",
    "released",
    "removed",
    "replica",
    "request",
    "resolved",
    "restarted",
    "resumed",
    "retry",
    "route",
    "scheduled",
    "segment",
    "sent",
    "server",
    "service",
    "session",
    "shard",
    "skipped",
    "snapshot",
    "socket",
    "started",
    "stopped",
    "storage",
    "stream",
    "submitted",
    "succeeded",
    "suspended",
    "sync",
    "table",
    "task",
    "thread",
    "throttled",
    "timer",
    "to",
    "token",
    "transaction",
    "truncated",
    "unloaded",
    "updated",
    "upload",
    "user",
    "using",
    "validated",
    "volume",
    "waiting",
    "with",
    "worker",
    "write",
    "written",
    "zone",
];

/// Generators that realize each category in this fixture.
fn generators(category: Category) -> &'static [&'static str] {
    match category {
        Category::Oid => &["blk", "hexid", "uuid"],
        Category::Loi => &["ipport", "path", "url"],
        Category::Obn => &["dotted"],
        Category::Tid => &["proto"],
        Category::Sid => &["bool"],
        Category::Tda => &["ms", "clock", "duration"],
        Category::Crs => &["mb", "pct"],
        Category::Oba => &["num"],
        Category::Stc => &["ecode"],
        Category::Otp => &["ver"],
    }
}

fn random_template(rng: &mut SplitMix64) -> Vec<Part> {
    let statics = rng.random_range(3..=7);
    let slots = rng.random_range(1..=3);
    let mut tokens: Vec<Option<&str>> = (0..statics)
        .map(|_| Some(*STATIC_WORDS.choose(rng).expect("non-empty")))
        .collect();
    for _ in 0..slots {
        let at = rng.random_range(0..=tokens.len());
        tokens.insert(at, None);
    }
    let mut parts = Vec::new();
    for (i, tok) in tokens.into_iter().enumerate() {
        if i > 0 {
            parts.push(Part::Static(" ".into()));
        }
        parts.push(match tok {
            Some(w) => Part::Static(w.to_string()),
            None => {
                let category = *Category::ALL.choose(rng).expect("non-empty");
                let generator = generators(category).choose(rng).expect("non-empty");
                Part::Slot {
                    generator: generator.to_string(),
                    category,
                }
            }
        });
    }
    parts
}

/// `n` records over `num_templates` distinct random templates, each used
/// `n / num_templates` times (the first `n % num_templates` once more),
/// in shuffled order.
pub fn category_dataset(num_templates: usize, n: usize, seed: u64) -> Dataset {
    assert!(num_templates > 0, "need at least one template");
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut templates = Vec::with_capacity(num_templates);
    while templates.len() < num_templates {
        let t = random_template(&mut rng);
        // Distinct by word pattern, ignoring which shape realized a slot.
        let key: Vec<String> = t
            .iter()
            .map(|p| match p {
                Part::Static(s) => s.clone(),
                Part::Slot { category, .. } => category.label().to_string(),
            })
            .collect();
        if seen.insert(key) {
            templates.push(t);
        }
    }
    let mut order: Vec<usize> = (0..n).map(|i| i % num_templates).collect();
    order.shuffle(&mut rng);
    let records = order
        .into_iter()
        .enumerate()
        .map(|(i, t)| render(&templates[t], i as u64 + 1, format!("E{}", t + 1), &mut rng))
        .collect();
    Dataset {
        name: format!("Synthetic{num_templates}"),
        records,
    }
}
