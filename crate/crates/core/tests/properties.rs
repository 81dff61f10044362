use compgen::decomp::{
    build_mask, insert_separators, relpos_bucket, strip_separators, MaskVariant, SepSequence, SEP,
};
use compgen::robustfill::Program;
use compgen::sampling::{Domain, Sampler, SamplerConfig};
use compgen::scan::{parse_command, Conjunction, ScanCommand, ScanPart};
use compgen::score::score_instance;
use compgen::tasks::{Origin, TaskInstance};
use proptest::prelude::*;

fn scan_command() -> impl Strategy<Value = ScanCommand> {
    let universe = ScanPart::enumerate_all();
    (1usize..=10)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0..102usize, n),
                prop::collection::vec(any::<bool>(), n - 1),
            )
        })
        .prop_map(move |(parts, conj)| {
            let parts: Vec<ScanPart> = parts.iter().map(|&i| universe[i]).collect();
            let conj: Vec<Conjunction> = conj
                .iter()
                .map(|&a| if a { Conjunction::After } else { Conjunction::And })
                .collect();
            ScanCommand::from_flat(&parts, &conj).unwrap()
        })
}

fn after_free(n: usize) -> impl Strategy<Value = String> {
    let universe = ScanPart::enumerate_all();
    prop::collection::vec(0..102usize, 1..=n).prop_map(move |ix| {
        ix.iter()
            .map(|&i| universe[i].to_string())
            .collect::<Vec<_>>()
            .join(" and ")
    })
}

fn rf_program() -> impl Strategy<Value = (Program, Vec<compgen::robustfill::IoExample>)> {
    (any::<u64>(), 1usize..=10).prop_map(|(seed, n)| {
        let mut s = Sampler::new(SamplerConfig::new(Domain::Robustfill, seed).with_lengths(n, n)).unwrap();
        let r = s.sample_rf().unwrap();
        (r.program, r.examples)
    })
}

fn sep_layout() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(1usize..=6, 1..=8).prop_map(|parts| {
        let mut flags = vec![true];
        for len in parts {
            flags.extend(std::iter::repeat_n(false, len));
            flags.push(true);
        }
        flags
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn scan_print_parse_round_trip(cmd in scan_command()) {
        let text = cmd.to_string();
        prop_assert_eq!(parse_command(&text).unwrap(), cmd.clone());
        let (parts, conj) = cmd.to_flat();
        prop_assert_eq!(ScanCommand::from_flat(&parts, &conj).unwrap(), cmd);
    }

    #[test]
    fn scan_spans_tile(cmd in scan_command()) {
        let prog = cmd.translate();
        prop_assert_eq!(prog.part_spans.len(), cmd.part_count());
        let mut at = 0;
        for r in &prog.part_spans {
            prop_assert_eq!(r.start, at);
            prop_assert!(r.end > r.start);
            at = r.end;
        }
        prop_assert_eq!(at, prog.tokens.len());
        let mut order = cmd.execution_order();
        order.sort();
        prop_assert_eq!(order, (0..cmd.part_count()).collect::<Vec<_>>());
    }

    #[test]
    fn after_swaps_and_concatenates(a in after_free(4), b in after_free(4)) {
        let tr = |s: &str| parse_command(s).unwrap().translate().token_strings();
        let after = tr(&format!("{a} after {b}"));
        prop_assert_eq!(after, [tr(&b), tr(&a)].concat());
        let and = tr(&format!("{a} and {b}"));
        prop_assert_eq!(and, [tr(&a), tr(&b)].concat());
    }

    #[test]
    fn rf_round_trip_and_spans((program, examples) in rf_program()) {
        let (tokens, spans) = program.tokens_with_spans();
        prop_assert_eq!(spans.len(), program.len());
        prop_assert_eq!(spans.last().unwrap().end, tokens.len());
        let back: Program = program.to_string().parse().unwrap();
        prop_assert_eq!(&back, &program);
        prop_assert!(program.satisfies(&examples));
    }

    #[test]
    fn separators_round_trip((program, _) in rf_program()) {
        let (tokens, spans) = program.tokens_with_spans();
        let seq = insert_separators(&tokens, &spans).unwrap();
        prop_assert_eq!(seq.part_spans(), spans.clone());
        prop_assert_eq!(seq.part_count(), program.len());
        prop_assert_eq!(strip_separators(seq.tokens()), tokens);
    }

    #[test]
    fn verdict_ignores_separators(cmd in scan_command(), at in prop::collection::vec(0usize..64, 0..5)) {
        let inst = TaskInstance::from_scan(&cmd, Origin::TestDist);
        let mut pred = inst.program_tokens();
        for i in at {
            let i = i % (pred.len() + 1);
            pred.insert(i, SEP.to_string());
        }
        prop_assert_eq!(score_instance(&inst, &pred), compgen::score::Verdict::Correct);
    }

    #[test]
    fn mask_structure(flags in sep_layout()) {
        let tokens: Vec<String> = flags
            .iter()
            .map(|&s| if s { SEP.to_string() } else { "x".to_string() })
            .collect();
        let seq = SepSequence::from_tokens(tokens).unwrap();
        let masks: Vec<_> = MaskVariant::ALL.iter().map(|&v| build_mask(&seq, v)).collect();
        let n = flags.len();
        for m in &masks {
            for q in 0..n {
                prop_assert!(m.row(q)[q]);
                prop_assert!(m.row(q)[q + 1..].iter().all(|&a| !a));
            }
        }
        let [full, sep_last, last] = [&masks[0], &masks[1], &masks[2]];
        for q in 0..n {
            if flags[q] {
                for k in 0..n {
                    prop_assert!(!last.allowed(q, k) || sep_last.allowed(q, k));
                    prop_assert!(!sep_last.allowed(q, k) || full.allowed(q, k));
                }
            } else {
                prop_assert_eq!(full.row(q), sep_last.row(q));
                prop_assert_eq!(full.row(q), last.row(q));
            }
        }
    }

    #[test]
    fn buckets_monotone(a in 0i64..600, b in 0i64..600) {
        let (lo, hi) = (a.min(b), a.max(b));
        for bidir in [false, true] {
            prop_assert!(relpos_bucket(-lo, bidir) <= relpos_bucket(-hi, bidir));
        }
        prop_assert!(relpos_bucket(lo.max(1), true) <= relpos_bucket(hi.max(1), true));
        if lo >= 128 {
            prop_assert_eq!(relpos_bucket(-lo, false), relpos_bucket(-hi, false));
            prop_assert_eq!(relpos_bucket(lo, true), relpos_bucket(hi, true));
            prop_assert_eq!(relpos_bucket(-lo, true), relpos_bucket(-hi, true));
        }
    }
}

#[test]
fn sampler_is_deterministic() {
    for domain in [Domain::Scan, Domain::Robustfill] {
        let cfg = SamplerConfig::new(domain, 99).with_lengths(1, 10);
        let mut a = Sampler::new(cfg.clone()).unwrap();
        let mut b = Sampler::new(cfg).unwrap();
        for _ in 0..200 {
            assert_eq!(a.sample().unwrap(), b.sample().unwrap());
        }
    }
}

#[test]
fn sampler_lengths_are_uniform() {
    for domain in [Domain::Scan, Domain::Robustfill] {
        let mut s = Sampler::new(SamplerConfig::new(domain, 1).with_lengths(1, 6)).unwrap();
        let mut counts = [0usize; 7];
        for _ in 0..10_000 {
            let n = match s.sample().unwrap() {
                compgen::sampling::Sample::Scan(c) => c.part_count(),
                compgen::sampling::Sample::Robustfill(r) => r.program.len(),
            };
            counts[n] += 1;
        }
        for (n, &c) in counts.iter().enumerate().skip(1) {
            let f = c as f64 / 10_000.0;
            assert!((f - 1.0 / 6.0).abs() <= 0.02, "{domain} length {n}: {f}");
        }
    }
}

// Deduplication caps SCAN length 1 at 102 commands, so only the RobustFill
// split keeps the sampler's uniform lengths.
#[test]
fn rf_length_split_is_uniform() {
    use compgen::tasks::{build_split, Role, SplitSpec, Task};
    let spec = SplitSpec::new(Domain::Robustfill, Task::Length, Role::Train, 1).with_sizes(10_000, 0);
    let recs = build_split(&spec).unwrap();
    for n in 1..=6 {
        let f = recs.iter().filter(|r| r.length == n).count() as f64 / recs.len() as f64;
        assert!((f - 1.0 / 6.0).abs() <= 0.02, "length {n}: {f}");
    }
}
