use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;

use super::contextual::ContextualClient;
use super::lexicon::SynonymLexicon;
use super::ops::augment_tokens;
use super::pool::FrequentWordPool;
use super::{AugmentationPlan, AugmentedRecord, Provenance, Technique, TrainingRecord};
use crate::corpus::{CvssMetric, VulnRecord, N_CLASSES};
use crate::error::{Error, Result};
use crate::rng::{rng_from, SeedPart};
use crate::textprep::{tokenize, StopWordSet};

/// Shared resources for text techniques.
#[derive(Clone, Copy)]
pub struct AugmentContext<'a> {
    pub stop_words: &'a StopWordSet,
    pub lexicon: &'a SynonymLexicon,
    pub client: &'a dyn ContextualClient,
}

#[derive(Debug, Clone)]
pub struct BalanceOutcome<'a> {
    pub records: Vec<TrainingRecord<'a>>,
    pub counts_before: [usize; N_CLASSES],
    pub counts_after: [usize; N_CLASSES],
    pub diagnostics: Vec<String>,
}

fn members_by_class(train: &[VulnRecord], task: CvssMetric) -> [Vec<usize>; N_CLASSES] {
    let mut by: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, r) in train.iter().enumerate() {
        by[r.labels.class_index(task)].push(i);
    }
    by
}

fn class_name(task: CvssMetric, c: usize) -> &'static str {
    task.class_names()[c]
}

/// Balances class counts for `task` according to `plan.technique`.
///
/// Originals come first in input order, followed by synthetic records grouped
/// by class. Output depends only on the inputs, plan and seed.
pub fn balance_training_set<'a>(
    train: &'a [VulnRecord],
    task: CvssMetric,
    plan: &AugmentationPlan,
    ctx: &AugmentContext<'_>,
) -> Result<BalanceOutcome<'a>> {
    if train.is_empty() {
        return Err(Error::EmptyData("training set is empty".into()));
    }
    plan.validate()?;
    let by_class = members_by_class(train, task);
    let counts_before = by_class.each_ref().map(Vec::len);
    let majority = *counts_before.iter().max().unwrap_or(&0);
    let mut diagnostics = Vec::new();
    let technique = plan.technique;
    let class_rng = |purpose: &str, c: usize| {
        rng_from(&[
            SeedPart::Int(plan.seed),
            SeedPart::Str(technique.name()),
            SeedPart::Str(purpose),
            SeedPart::Str(task.abbrev()),
            SeedPart::from(c),
        ])
    };
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() && technique != Technique::None {
            diagnostics.push(format!("{task}: class {} has no training samples; left as is", class_name(task, c)));
        }
    }

    let mut records: Vec<TrainingRecord<'a>> = Vec::new();
    match technique {
        Technique::None => records.extend(train.iter().map(TrainingRecord::Original)),
        Technique::UnderSample => {
            let minority = counts_before.iter().copied().filter(|&n| n > 0).min().unwrap_or(0);
            let mut keep = vec![false; train.len()];
            for (c, members) in by_class.iter().enumerate() {
                let mut r = class_rng("keep", c);
                for i in sample(&mut r, members.len(), minority.min(members.len())) {
                    keep[members[i]] = true;
                }
            }
            records.extend(train.iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| TrainingRecord::Original(r)));
        }
        _ => {
            records.extend(train.iter().map(TrainingRecord::Original));
            let pool = technique.is_simple_text().then(|| {
                FrequentWordPool::build(
                    train.iter().map(|r| r.description.as_str()),
                    plan.min_doc_fraction_for_frequent_words,
                    ctx.stop_words,
                )
            });
            let lexicon = (technique == Technique::SynonymReplacement || technique == Technique::Combination)
                .then(|| ctx.lexicon.with_corpus(train.iter().map(|r| r.description.as_str())));
            for (c, members) in by_class.iter().enumerate() {
                if members.is_empty() || members.len() >= majority {
                    continue;
                }
                let deficit = majority - members.len();
                let mut r = class_rng("origin", c);
                let origins: Vec<&VulnRecord> =
                    (0..deficit).map(|_| &train[members[r.gen_range(0..members.len())]]).collect();
                let generated: Vec<std::result::Result<AugmentedRecord, String>> = origins
                    .par_iter()
                    .enumerate()
                    .map(|(j, origin)| {
                        synthesize(origin, j, plan, ctx, pool.as_ref(), lexicon.as_ref().unwrap_or(ctx.lexicon))
                    })
                    .collect::<Result<_>>()?;
                let mut skipped = 0;
                let mut first_reason = None;
                for g in generated {
                    match g {
                        Ok(a) => records.push(TrainingRecord::Augmented(a)),
                        Err(reason) => {
                            skipped += 1;
                            first_reason.get_or_insert(reason);
                        }
                    }
                }
                if skipped > 0 {
                    diagnostics.push(format!(
                        "{task}: {skipped} synthetic {} samples skipped ({})",
                        class_name(task, c),
                        first_reason.unwrap_or_default()
                    ));
                }
            }
        }
    }

    let mut counts_after = [0usize; N_CLASSES];
    for r in &records {
        counts_after[r.labels().class_index(task)] += 1;
    }
    Ok(BalanceOutcome { records, counts_before, counts_after, diagnostics })
}

/// One synthetic sample. `Ok(Err(reason))` means the sample is skipped.
pub(crate) fn synthesize(
    origin: &VulnRecord,
    j: usize,
    plan: &AugmentationPlan,
    ctx: &AugmentContext<'_>,
    pool: Option<&FrequentWordPool>,
    lexicon: &SynonymLexicon,
) -> Result<std::result::Result<AugmentedRecord, String>> {
    let technique = plan.technique;
    let mut provenance = Provenance::new(technique);
    if technique == Technique::OverSample {
        return Ok(Ok(AugmentedRecord::from_origin(origin, origin.description.clone(), provenance)));
    }
    if let Some(mode) = technique.contextual_mode() {
        return Ok(match ctx.client.rewrite(&origin.description, mode) {
            Ok(text) if text.trim().is_empty() => Err(format!("empty service response for {}", origin.id)),
            Ok(text) => {
                if text.trim() == origin.description.trim() {
                    provenance.flags.push("identical_to_input".into());
                }
                Ok(AugmentedRecord::from_origin(origin, text, provenance))
            }
            Err(e) => Err(format!("{} failed: {e}", origin.id)),
        });
    }
    let mut r = rng_from(&[SeedPart::Int(plan.seed), SeedPart::Str(&origin.id), SeedPart::from(j)]);
    let tokens: Vec<String> = tokenize(&origin.description).into_iter().map(String::from).collect();
    let k = plan.budget_policy.draw(tokens.len(), plan.change_fraction, &mut r);
    let pool = pool.expect("pool is built for word-level techniques");
    match augment_tokens(technique, &tokens, pool, lexicon, ctx.stop_words, k, &mut r) {
        Ok(out) => {
            provenance.edits = out.edits;
            provenance.shortfall = out.shortfall;
            Ok(Ok(AugmentedRecord::from_origin(origin, out.tokens.join(" "), provenance)))
        }
        Err(Error::Degenerate(m)) => Ok(Err(m)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::StubClient;
    use crate::corpus::Labels;
    use chrono::{TimeZone, Utc};

    fn rec(i: usize, av: u8) -> VulnRecord {
        VulnRecord {
            id: format!("CVE-2020-{i:04}"),
            description: format!("buffer overflow in component{i} allows remote attackers to execute code"),
            published: Utc.timestamp_opt(1_600_000_000 + i as i64, 0).unwrap(),
            labels: Labels::from_indices([av, 1, 2, 0, 0, 0, 1]).unwrap(),
        }
    }

    fn fixture() -> Vec<VulnRecord> {
        // Access vector counts {Local: 5, Adjacent: 2, Network: 3}.
        [0, 0, 0, 0, 0, 1, 1, 2, 2, 2].iter().enumerate().map(|(i, &c)| rec(i, c)).collect()
    }

    fn run(t: Technique) -> BalanceOutcome<'static> {
        let train: &'static [VulnRecord] = Box::leak(fixture().into_boxed_slice());
        let sw = StopWordSet::bundled();
        let lex = SynonymLexicon::bundled();
        let ctx = AugmentContext { stop_words: &sw, lexicon: &lex, client: &StubClient };
        let mut plan = AugmentationPlan::new(t, 42);
        plan.min_doc_fraction_for_frequent_words = 0.0;
        balance_training_set(train, CvssMetric::AccessVector, &plan, &ctx).unwrap()
    }

    #[test]
    fn counting_examples() {
        assert_eq!(run(Technique::None).counts_after, [5, 2, 3]);
        let o = run(Technique::OverSample);
        assert_eq!(o.counts_after, [5, 5, 5]);
        assert_eq!(o.records.iter().filter(|r| r.is_augmented()).count(), 5);
        assert_eq!(run(Technique::UnderSample).counts_after, [2, 2, 2]);
        let c = run(Technique::Combination);
        assert_eq!(c.counts_after, [5, 5, 5]);
        assert_eq!(c.records.iter().filter(|r| !r.is_augmented()).count(), 10);
        for t in [Technique::BackTranslation, Technique::Paraphrasing, Technique::Deletion] {
            assert_eq!(run(t).counts_after, [5, 5, 5], "{t}");
        }
    }

    #[test]
    fn deterministic() {
        let a = run(Technique::Combination);
        let b = run(Technique::Combination);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn absent_class_is_reported() {
        let train: Vec<VulnRecord> = [0, 0, 0, 2].iter().enumerate().map(|(i, &c)| rec(i, c)).collect();
        let sw = StopWordSet::bundled();
        let lex = SynonymLexicon::bundled();
        let ctx = AugmentContext { stop_words: &sw, lexicon: &lex, client: &StubClient };
        let plan = AugmentationPlan::new(Technique::Insertion, 1);
        let out = balance_training_set(&train, CvssMetric::AccessVector, &plan, &ctx).unwrap();
        assert_eq!(out.counts_after, [3, 0, 3]);
        assert_eq!(out.diagnostics.len(), 1);
        let plan = AugmentationPlan::new(Technique::UnderSample, 1);
        let out = balance_training_set(&train, CvssMetric::AccessVector, &plan, &ctx).unwrap();
        assert_eq!(out.counts_after, [1, 0, 1]);
    }
}
