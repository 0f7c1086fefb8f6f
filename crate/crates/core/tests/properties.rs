use proptest::prelude::*;
use tempogran::calendar::{HierarchyTable, IndexValue, Origin, RungDef};
use tempogran::cyclic::{compose_up, evaluate, reduce_to_single, CyclicDescriptor};
use tempogran::distill::{letter_values, quantile, summarize_cells, DEFAULT_PROBS};
use tempogran::harmony::{classify_pair, CountMode, OccupancyTable};
use tempogran::table::{enumerate_cyclic, GranularTable};

fn ladder(periods: &[u64], phases: &[u64]) -> HierarchyTable {
    let mut rungs: Vec<RungDef> = periods
        .iter()
        .zip(phases)
        .enumerate()
        .map(|(i, (&p, &ph))| RungDef::constant(format!("r{i}"), p).with_phase(ph % p))
        .collect();
    rungs.push(RungDef::top(format!("r{}", periods.len())));
    HierarchyTable::new(Origin::default(), rungs).unwrap()
}

/// Mixed-radix digits of the granule containing `z`, starting from `phases`.
fn digits(periods: &[u64], phases: &[u64], z: u64) -> Vec<u64> {
    let mut d: Vec<u64> = phases.iter().zip(periods).map(|(ph, p)| ph % p).collect();
    for _ in 0..z {
        for (x, p) in d.iter_mut().zip(periods) {
            *x += 1;
            if *x < *p {
                break;
            }
            *x = 0;
        }
    }
    d
}

fn span_value(periods: &[u64], d: &[u64], l: usize, m: usize) -> u64 {
    (l..m).rev().fold(0, |v, i| v * periods[i] + d[i])
}

/// Sample quantile type 7 written the textbook way: 1-based order
/// statistics with `j = ⌊np + m⌋`, `m = 1 - p`.
fn quantile_oracle(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let m = 1.0 - p;
    let j = (n * p + m).floor();
    let g = n * p + m - j;
    let at = |k: f64| sorted[(k.clamp(1.0, n) as usize) - 1];
    (1.0 - g) * at(j) + g * at(j + 1.0)
}

proptest! {
    #[test]
    fn constant_ladders_match_odometer(
        periods in prop::collection::vec(2u64..6, 2..5),
        phases in prop::collection::vec(0u64..6, 4),
        z in 0u64..400,
    ) {
        let h = ladder(&periods, &phases);
        let d = digits(&periods, &phases, z);
        for desc in enumerate_cyclic(&h, periods.len()).unwrap() {
            let (l, m) = desc.span_rungs().unwrap();
            let want = span_value(&periods, &d, l, m);
            let got = evaluate(&h, &desc, IndexValue(z)).unwrap();
            prop_assert_eq!(got.0, want);
            prop_assert!(got.0 < desc.level_count());
            prop_assert_eq!(compose_up(&h, l, m, IndexValue(z)).unwrap().0, want);
            for i in l..m {
                prop_assert_eq!(reduce_to_single(&h, (l, m, got), (i, i + 1)).unwrap().0, d[i]);
            }
        }
    }

    #[test]
    fn period_lengths_multiply(periods in prop::collection::vec(2u64..50, 2..6)) {
        let h = ladder(&periods, &vec![0; periods.len()]);
        let n = periods.len();
        for l in 0..n {
            for m in l + 1..=n {
                let direct: u64 = periods[l..m].iter().product();
                prop_assert_eq!(h.period_length(l, m).unwrap(), direct);
                for k in l + 1..m {
                    prop_assert_eq!(h.period_length(l, k).unwrap() * h.period_length(k, m).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn quantiles_match_textbook_definition(
        mut v in prop::collection::vec(-1.0f64..1.0, 1..200),
        p in 0.0f64..1.0,
    ) {
        v.sort_by(f64::total_cmp);
        let q = quantile(&v, p);
        prop_assert!((q - quantile_oracle(&v, p)).abs() <= 1e-12);
        prop_assert!(v[0] <= q && q <= v[v.len() - 1]);
        for (k, x) in v.iter().enumerate().skip(1) {
            prop_assert_eq!(quantile(&v, k as f64 / (v.len() - 1) as f64), *x);
        }
    }

    #[test]
    fn letter_values_nest(mut v in prop::collection::vec(-100.0f64..100.0, 0..3000)) {
        v.sort_by(f64::total_cmp);
        let lv = letter_values(&v);
        let expected = if v.len() < 2 { 0 } else { (v.len() as f64).log2().ceil() as usize - 1 };
        prop_assert_eq!(lv.len(), expected);
        for w in lv.windows(2) {
            prop_assert!(w[1].lower <= w[0].lower && w[0].upper <= w[1].upper);
        }
    }

    #[test]
    fn classification_is_symmetric(k in 1usize..6, l in 1usize..6, seed in prop::collection::vec(0u64..20, 36)) {
        let counts: Vec<u64> = seed.into_iter().take(k * l).collect();
        prop_assume!(counts.len() == k * l);
        let o = OccupancyTable { row: "a".into(), column: "b".into(), mode: CountMode::Observed, k, l, counts };
        let direct = classify_pair(&o, 0.27);
        let flipped = classify_pair(&o.transpose(), 0.27);
        prop_assert_eq!(flipped.verdict, direct.verdict);
        prop_assert_eq!(flipped.evidence, direct.transpose().evidence);
    }

    #[test]
    fn summaries_ignore_row_order_and_swap_cleanly(
        values in prop::collection::vec(prop::option::weighted(0.9, -50.0f64..50.0), 1..300),
        rotation in 0usize..300,
    ) {
        let h = ladder(&[3, 4], &[0, 0]);
        let n = values.len();
        let build = |order: &[usize]| {
            GranularTable::new(
                order.iter().map(|&i| IndexValue(i as u64)).collect(),
                vec![],
                vec![("v".into(), order.iter().map(|&i| values[i]).collect())],
            )
            .unwrap()
        };
        let ds = [CyclicDescriptor::span(&h, 0, 1).unwrap(), CyclicDescriptor::span(&h, 1, 2).unwrap()];
        let forward: Vec<usize> = (0..n).collect();
        let mut shuffled: Vec<usize> = (0..n).rev().collect();
        shuffled.rotate_left(rotation % n);
        let a = build(&forward).augment(&h, &ds).unwrap();
        let b = build(&shuffled).augment(&h, &ds).unwrap();
        prop_assert!(a.verify(&h));
        prop_assert_eq!(a.augment(&h, &ds).unwrap(), a.clone());

        let sa = summarize_cells(&a, "r0_r1", "r1_r2", "v", &DEFAULT_PROBS).unwrap();
        let sb = summarize_cells(&b, "r0_r1", "r1_r2", "v", &DEFAULT_PROBS).unwrap();
        prop_assert_eq!(&sa, &sb);
        prop_assert_eq!(sa.cells.iter().map(|c| c.n).sum::<u64>(), values.iter().flatten().count() as u64);
        for c in &sa.cells {
            prop_assert!(c.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
            if let (Some(lo), Some(hi)) = (c.min, c.max) {
                prop_assert!(c.quantiles.iter().all(|(_, q)| lo <= *q && *q <= hi));
            } else {
                prop_assert_eq!(c.n, 0);
            }
        }

        let swapped = summarize_cells(&a, "r1_r2", "r0_r1", "v", &DEFAULT_PROBS).unwrap();
        prop_assert_eq!(swapped.cells.len(), sa.cells.len());
        for c in &swapped.cells {
            let d = sa.cell(c.x_level, c.facet_level).unwrap();
            prop_assert_eq!((c.n, &c.quantiles, c.mean), (d.n, &d.quantiles, d.mean));
        }
    }
}
