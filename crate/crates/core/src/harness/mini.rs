//! Synthetic miniature corpus with planted class keywords and skewed class
//! distributions, for fast end-to-end runs.

use chrono::{Duration, TimeZone, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{CvssMetric, Labels, VulnRecord, N_CLASSES, N_METRICS};
use crate::rng::rng_from;
use crate::rng::SeedPart;

pub const MINI_CORPUS_SIZE: usize = 2000;
pub const MINI_CORPUS_SEED: u64 = 20_240_601;

/// Class proportions per metric, in fixed class order.
pub const CLASS_WEIGHTS: [[f64; N_CLASSES]; N_METRICS] = [
    [0.13, 0.05, 0.82],
    [0.06, 0.30, 0.64],
    [0.03, 0.13, 0.84],
    [0.42, 0.44, 0.14],
    [0.45, 0.42, 0.13],
    [0.43, 0.40, 0.17],
    [0.10, 0.58, 0.32],
];

/// Probability that a description carries a phrase for a given metric.
pub const SIGNAL_RATE: f64 = 0.7;
/// Probability that a carried phrase belongs to a wrong class.
pub const CONFUSION_RATE: f64 = 0.15;

const KEYWORDS: [[&[&str]; N_CLASSES]; N_METRICS] = [
    [
        &["local users", "locally logged operators", "console session", "physical proximity"],
        &["adjacent network segment", "bluetooth pairing", "shared broadcast domain", "wireless neighbors"],
        &["remote attackers", "crafted http request", "internet facing endpoint", "network packets"],
    ],
    [
        &["race condition window", "precise timing", "unusual deployment", "intercepting traffic position"],
        &["victim interaction", "crafted web page", "malicious attachment", "persuading a user"],
        &["default installation", "simple request", "trivially reachable", "straightforward input"],
    ],
    [
        &["multiple authentications", "two administrator logins", "chained credential challenges"],
        &["authenticated users", "valid login", "logged accounts", "session credentials"],
        &["unauthenticated attackers", "anonymous access", "missing login check", "pre auth"],
    ],
    [
        &["keeps records private", "secrecy preserved", "confidential data untouched"],
        &["leak session tokens", "disclose partial memory", "read some logs"],
        &["dump entire database", "read arbitrary files", "full memory disclosure"],
    ],
    [
        &["data unchanged", "integrity preserved", "tampering impossible"],
        &["inject script", "alter log entries", "modify selected settings"],
        &["overwrite any binary", "replace system executables", "unrestricted filesystem write"],
    ],
    [
        &["service stays responsive", "uptime unaffected", "availability intact"],
        &["degrade performance", "slow responses", "temporary hang"],
        &["crash the host", "permanent outage", "reboot loop"],
    ],
    [
        &["minor weakness", "limited exposure", "low urgency"],
        &["moderate risk", "notable flaw", "medium urgency"],
        &["critical bug", "severe compromise", "urgent patch"],
    ],
];

const PRODUCTS: &[&str] = &[
    "Apache HTTP Server", "OpenSSL", "Linux kernel", "Microsoft Windows", "Mozilla Firefox", "PHP",
    "WordPress plugin", "Cisco IOS", "Oracle MySQL", "Adobe Reader", "Google Chrome", "Samba", "nginx",
    "Joomla component", "IBM WebSphere", "Drupal module", "QEMU", "Wireshark", "libxml2", "Jenkins",
];

const FLAWS: &[&str] = &[
    "Buffer overflow", "Integer overflow", "Use-after-free", "SQL injection", "Cross-site scripting",
    "Directory traversal", "Improper input validation", "Format string vulnerability", "Memory leak",
    "NULL pointer dereference", "Heap corruption", "Off-by-one error", "Type confusion",
];

const COMPONENTS: &[&str] = &[
    "the parser", "the authentication module", "the image decoder", "the admin panel", "the RPC handler",
    "the file upload feature", "the DNS resolver", "the XML processor", "the scheduler", "the TLS stack",
    "the search function", "the printing subsystem", "the USB driver", "the mail gateway",
];

const FILLERS: &[&str] = &[
    "which allows", "that might let", "in certain versions, enabling", "related to", "which could permit",
    "when processing input, letting",
];

fn pick<'a>(r: &mut impl rand::Rng, xs: &[&'a str]) -> &'a str {
    xs[r.gen_range(0..xs.len())]
}

/// Deterministic synthetic corpus of `n` records, time-ordered.
pub fn generate_mini_corpus(n: usize, seed: u64) -> Vec<VulnRecord> {
    let mut r = rng_from(&[SeedPart::Int(seed), SeedPart::Str("mini-corpus")]);
    let dists: Vec<WeightedIndex<f64>> =
        CLASS_WEIGHTS.iter().map(|w| WeightedIndex::new(w).expect("positive weights")).collect();
    let mut published = Utc.with_ymd_and_hms(2005, 1, 1, 0, 0, 0).unwrap();
    let mut per_year = 0usize;
    let mut year = 2005;
    (0..n)
        .map(|_| {
            published += Duration::hours(r.gen_range(24..24 * 5));
            let y = chrono::Datelike::year(&published);
            if y != year {
                year = y;
                per_year = 0;
            }
            per_year += 1;
            let mut classes = [0u8; N_METRICS];
            for (m, d) in dists.iter().enumerate() {
                classes[m] = d.sample(&mut r) as u8;
            }
            let mut phrases: Vec<&str> = Vec::new();
            for (m, &c) in classes.iter().enumerate() {
                if r.gen_bool(SIGNAL_RATE) {
                    let class = if r.gen_bool(CONFUSION_RATE) {
                        (c as usize + r.gen_range(1..N_CLASSES)) % N_CLASSES
                    } else {
                        c as usize
                    };
                    phrases.push(pick(&mut r, KEYWORDS[m][class]));
                }
            }
            phrases.shuffle(&mut r);
            let description = format!(
                "{} in {} in {} {}.{} {} {}.",
                pick(&mut r, FLAWS),
                pick(&mut r, COMPONENTS),
                pick(&mut r, PRODUCTS),
                r.gen_range(1..10),
                r.gen_range(0..20),
                pick(&mut r, FILLERS),
                if phrases.is_empty() { "unspecified impact".to_string() } else { phrases.join(", ") },
            );
            VulnRecord {
                id: format!("CVE-{year}-{:05}", per_year),
                description,
                published,
                labels: Labels::from_indices(classes).expect("class indices are in range"),
            }
        })
        .collect()
}

/// Planted phrases for one class of a metric.
pub fn keywords(metric: CvssMetric, class: usize) -> &'static [&'static str] {
    KEYWORDS[metric.index()][class]
}
