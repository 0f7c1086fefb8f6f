//! Acceptance checks: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{Datelike, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempogran::calendar::gregorian::{self, midnight, GregorianUnit};
use tempogran::calendar::{Calendar, HierarchyTable, IndexValue};
use tempogran::cyclic::{compose_up, evaluate, reduce_to_single, CyclicDescriptor};
use tempogran::distill::{summarize_cells, DEFAULT_PROBS};
use tempogran::fixtures::{self, GREGORIAN_CAL, MAYAN_CAL};
use tempogran::harmony::{classify_pair, cross_tab_structural, Verdict, DEFAULT_NEAR_THRESHOLD};
use tempogran::table::{enumerate_cyclic, ingest, GranularTable};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tempogran")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).args(args).env_remove("TEMPOGRAN_OUT_DIR").output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("tempogran {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Generated fixtures shared by the CLI checks.
fn fixture_dir() -> &'static Path {
    use std::sync::OnceLock;
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tempfile::tempdir().expect("temp dir");
        run_cli(&["--out-dir", d.path().to_str().unwrap(), "fixtures", "generate"]).expect("fixtures generate");
        d
    })
    .path()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn periods_of_spans() -> Outcome {
    let h = Calendar::from_toml_str(GREGORIAN_CAL).map_err(|e| e.to_string())?.hierarchy;
    let want = [("minute", "hour", 60), ("minute", "day", 1440), ("hour", "day", 24), ("hour", "week", 168), ("day", "week", 7)];
    for (l, m, period) in want {
        let d = CyclicDescriptor::between(&h, l, m).map_err(|e| e.to_string())?;
        ensure!(d.level_count() == period, "{l}_{m}: {} levels, expected {period}", d.level_count());
        let pl = h.period_length(h.rung_index(l).unwrap(), h.rung_index(m).unwrap()).map_err(|e| e.to_string())?;
        ensure!(pl == period, "P({l}, {m}) = {pl}, expected {period}");
    }
    Ok("60, 1440, 24, 168, 7".into())
}

const EXPECTED_HARMONIES: &str = "facet_variable,x_variable,facet_levels,x_levels
day_week,hour_day,7,24
day_month,hour_day,31,24
week_month,hour_day,5,24
wknd_wday,hour_day,2,24
hour_day,day_week,24,7
day_month,day_week,31,7
week_month,day_week,5,7
hour_day,day_month,24,31
day_week,day_month,7,31
wknd_wday,day_month,2,31
hour_day,week_month,24,5
day_week,week_month,7,5
wknd_wday,week_month,2,5
hour_day,wknd_wday,24,2
day_month,wknd_wday,31,2
week_month,wknd_wday,5,2
";

fn harmony_on_fixture() -> Outcome {
    let dir = fixture_dir();
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rows = std::fs::read_to_string(dir.join("synthetic_smart_meter.csv")).map_err(|e| e.to_string())?.lines().count() - 1;
    let start = Instant::now();
    run_cli(&["--config", p(&dir.join("smart_meter.toml")), "--out-dir", p(out.path()), "harmony", "--max-levels", "31"])?;
    let elapsed = start.elapsed();
    let got = std::fs::read_to_string(out.path().join("harmony.csv")).map_err(|e| e.to_string())?;
    ensure!(got == EXPECTED_HARMONIES, "harmony.csv differs:\n{got}");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("16 rows from {rows} readings in {:.2}s", elapsed.as_secs_f64()))
}

fn clash_evidence() -> Outcome {
    let cal = Calendar::from_toml_str(fixtures::SMART_METER_CAL).map_err(|e| e.to_string())?;
    let dm = cal.descriptor("day_month").map_err(|e| e.to_string())?;
    let wm = cal.descriptor("week_month").map_err(|e| e.to_string())?;
    let o = cross_tab_structural(&cal.hierarchy, &dm, &wm, None).map_err(|e| e.to_string())?;
    let c = classify_pair(&o, DEFAULT_NEAR_THRESHOLD);
    ensure!(c.verdict == Verdict::Clash, "day_month x week_month: {:?}", c.verdict);
    ensure!(c.evidence.iter().any(|e| (e.k, e.l, e.count) == (0, 4, 0)), "cell (first day, fifth week) not cited");

    let h = gregorian::hierarchy(midnight(2013, 1, 1), GregorianUnit::Day, true, 4).map_err(|e| e.to_string())?;
    let dw = CyclicDescriptor::between(&h, "day", "week").map_err(|e| e.to_string())?;
    let my = CyclicDescriptor::between(&h, "month", "year").map_err(|e| e.to_string())?;
    let o = cross_tab_structural(&h, &dw, &my, Some(0..365)).map_err(|e| e.to_string())?;
    let occupied = o.counts.iter().filter(|&&c| c > 0).count();
    let v = classify_pair(&o, DEFAULT_NEAR_THRESHOLD).verdict;
    ensure!(v == Verdict::Harmony && occupied == 84, "day_week x month_year: {v:?}, {occupied} cells occupied");
    Ok(format!("{} empty cells incl. (0, 4); 84/84 occupied over 2013", c.evidence.len()))
}

fn near_clash_28_years() -> Outcome {
    let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, true, 28).map_err(|e| e.to_string())?;
    let dy = CyclicDescriptor::between(&h, "day", "year").map_err(|e| e.to_string())?;
    let dw = CyclicDescriptor::between(&h, "day", "week").map_err(|e| e.to_string())?;
    let o = cross_tab_structural(&h, &dy, &dw, None).map_err(|e| e.to_string())?;
    ensure!(o.total() == 10227, "scanned {} days, expected 28 years", o.total());
    let c = classify_pair(&o, DEFAULT_NEAR_THRESHOLD);
    ensure!(c.verdict == Verdict::NearClash, "verdict {:?}", c.verdict);
    let cited: BTreeSet<usize> = c.evidence.iter().filter(|e| e.k == 365).map(|e| e.l).collect();
    ensure!(cited.len() == 7, "leap-day cells cited: {cited:?}");
    Ok(format!("near-clash, {} cells cited, all 7 day-366 cells", c.evidence.len()))
}

fn civil(l: usize, m: usize, t: chrono::NaiveDateTime) -> u64 {
    let (hour, wday) = (t.hour() as u64, t.weekday().num_days_from_sunday() as u64);
    let (mday, yday) = (t.day0() as u64, t.ordinal0() as u64);
    match (l, m) {
        (0, 1) => hour,
        (0, 2) => wday * 24 + hour,
        (1, 2) => wday,
        (0, 3) => mday * 24 + hour,
        (1, 3) => mday,
        (2, 3) => mday / 7,
        (0, 4) => yday * 24 + hour,
        (1, 4) => yday,
        (2, 4) => yday / 7,
        (3, 4) => t.month0() as u64,
        _ => unreachable!(),
    }
}

fn mayan() -> Result<HierarchyTable, String> {
    Ok(Calendar::from_toml_str(MAYAN_CAL).map_err(|e| e.to_string())?.hierarchy)
}

/// Kin, uinal, tun and katun counters for kin count `z`.
fn long_count(z: u64) -> [u64; 4] {
    [z % 20, z / 20 % 18, z / 360 % 20, z / 7200 % 20]
}

fn mixed(d: &[u64; 4], l: usize, m: usize) -> u64 {
    const R: [u64; 4] = [20, 18, 20, 20];
    (l..m).rev().fold(0, |v, i| v * R[i] + d[i])
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Hour, true, 4).map_err(|e| e.to_string())?;
    let ds = enumerate_cyclic(&h, 4).map_err(|e| e.to_string())?;
    let origin = midnight(2012, 1, 1);
    let hours = (midnight(2016, 1, 1) - origin).num_hours() as u64;
    let mut checks = 0u64;
    let mut t = origin;
    for z in 0..hours {
        for d in &ds {
            let (l, m) = d.span_rungs().unwrap();
            let want = civil(l, m, t);
            let got = evaluate(&h, d, IndexValue(z)).map_err(|e| e.to_string())?.0;
            let up = compose_up(&h, l, m, IndexValue(z)).map_err(|e| e.to_string())?.0;
            ensure!(got == want && up == want, "{} at {t}: {got}/{up}, oracle {want}", d.name());
            checks += 2;
        }
        let hw = compose_up(&h, 0, 2, IndexValue(z)).map_err(|e| e.to_string())?;
        for (target, want) in [((0, 1), civil(0, 1, t)), ((1, 2), civil(1, 2, t))] {
            let got = reduce_to_single(&h, (0, 2, hw), target).map_err(|e| e.to_string())?.0;
            ensure!(got == want, "reduce hour_week -> {target:?} at {t}");
            checks += 1;
        }
        t += chrono::Duration::hours(1);
    }

    let h = mayan()?;
    let ds = enumerate_cyclic(&h, 4).map_err(|e| e.to_string())?;
    for z in 0..21_600u64 {
        let digits = long_count(z);
        for d in &ds {
            let (l, m) = d.span_rungs().unwrap();
            let want = mixed(&digits, l, m);
            let got = evaluate(&h, d, IndexValue(z)).map_err(|e| e.to_string())?.0;
            let up = compose_up(&h, l, m, IndexValue(z)).map_err(|e| e.to_string())?;
            ensure!(got == want && up.0 == want, "{} at kin {z}", d.name());
            for l1 in l..m {
                for m1 in l1 + 1..=m {
                    let r = reduce_to_single(&h, (l, m, up), (l1, m1)).map_err(|e| e.to_string())?.0;
                    ensure!(r == mixed(&digits, l1, m1), "reduce {l},{m} -> {l1},{m1} at kin {z}");
                    checks += 1;
                }
            }
            checks += 2;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{checks} values, 0 mismatches, {:.2}s", elapsed.as_secs_f64()))
}

fn mayan_round_trip() -> Outcome {
    let h = mayan()?;
    let mut n = 0u64;
    for z in 0..21_600u64 {
        for l in 0..4 {
            for m in l + 1..5 {
                let up = compose_up(&h, l, m, IndexValue(z)).map_err(|e| e.to_string())?;
                for i in l..m {
                    let single = compose_up(&h, i, i + 1, IndexValue(z)).map_err(|e| e.to_string())?;
                    let back = reduce_to_single(&h, (l, m, up), (i, i + 1)).map_err(|e| e.to_string())?;
                    ensure!(back == single, "kin {z}: reduce({l},{m}) -> {i} gave {back:?}, single-order-up {single:?}");
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} reductions exact"))
}

fn quasi_bounds() -> Outcome {
    let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, true, 4).map_err(|e| e.to_string())?;
    let dy = CyclicDescriptor::between(&h, "day", "year").map_err(|e| e.to_string())?;
    let dm = CyclicDescriptor::between(&h, "day", "month").map_err(|e| e.to_string())?;
    let origin = midnight(2012, 1, 1);
    let mut per_year: std::collections::BTreeMap<i32, BTreeSet<u64>> = Default::default();
    let mut leap_years = BTreeSet::new();
    for z in 0..(midnight(2016, 1, 1) - origin).num_days() as u64 {
        let t = origin + chrono::Duration::days(z as i64);
        per_year.entry(t.year()).or_default().insert(evaluate(&h, &dy, IndexValue(z)).map_err(|e| e.to_string())?.0);
        if t.month() == 2 && evaluate(&h, &dm, IndexValue(z)).map_err(|e| e.to_string())?.0 == 28 {
            leap_years.insert(t.year());
        }
    }
    for (year, levels) in &per_year {
        let len = if *year == 2012 { 366 } else { 365 };
        ensure!(*levels == (0..len).collect::<BTreeSet<u64>>(), "{year}: levels are not exactly 0..{len}");
    }
    ensure!(leap_years == BTreeSet::from([2012]), "February 29 seen in {leap_years:?}");
    Ok("2012 covers 0..366, 2013-2015 cover 0..365; Feb 29 only in 2012".into())
}

fn quantile_oracle(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let m = 1.0 - p;
    let j = (n * p + m).floor();
    let g = n * p + m - j;
    let at = |k: f64| sorted[(k.clamp(1.0, n) as usize) - 1];
    (1.0 - g) * at(j) + g * at(j + 1.0)
}

fn quantile_correctness() -> Outcome {
    let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Hour, true, 4).map_err(|e| e.to_string())?;
    let hd = CyclicDescriptor::between(&h, "hour", "day").map_err(|e| e.to_string())?;
    let dw = CyclicDescriptor::between(&h, "day", "week").map_err(|e| e.to_string())?;
    // 1000 weeks of hourly values: 1000 observations in each of the 168 cells
    let n = 168 * 1000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let values: Vec<Option<f64>> = (0..n).map(|_| Some(rng.random::<f64>() * 10.0 - 3.0)).collect();
    let t = GranularTable::new((0..n).map(IndexValue).collect(), vec![], vec![("v".into(), values.clone())])
        .map_err(|e| e.to_string())?
        .augment(&h, &[hd.clone(), dw.clone()])
        .map_err(|e| e.to_string())?;
    let s = summarize_cells(&t, "hour_day", "day_week", "v", &DEFAULT_PROBS).map_err(|e| e.to_string())?;
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); 168];
    for z in 0..n {
        let f = evaluate(&h, &dw, IndexValue(z)).unwrap().0;
        let x = evaluate(&h, &hd, IndexValue(z)).unwrap().0;
        cells[(f * 24 + x) as usize].push(values[z as usize].unwrap());
    }
    let mut worst = 0.0f64;
    for c in &s.cells {
        let mut v = cells[(c.facet_level * 24 + c.x_level) as usize].clone();
        v.sort_by(f64::total_cmp);
        ensure!(c.n == 1000 && v.len() == 1000, "cell ({}, {}) has {} values", c.facet_level, c.x_level, c.n);
        for (p, q) in &c.quantiles {
            worst = worst.max((q - quantile_oracle(&v, *p)).abs());
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("168 cells x 7 probabilities, max deviation {worst:e}"))
}

fn cricket() -> Outcome {
    let dir = fixture_dir();
    let out = run_cli(&["calendar", "validate", p(&dir.join("cricket.cal"))])?;
    for line in ["over\t20\t0", "inning\t2\t0", "match\tk(match, season)\t0", "season\t1\t0"] {
        ensure!(out.lines().any(|l| l == line), "validate output lacks {line:?}:\n{out}");
    }
    let cal = Calendar::load(dir.join("cricket.cal")).map_err(|e| e.to_string())?;
    let n = enumerate_cyclic(&cal.hierarchy, 3).map_err(|e| e.to_string())?.len();
    ensure!(n == 6, "{n} descriptors");
    let bundled = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/cricket_sample.csv");
    let file = std::fs::File::open(&bundled).map_err(|e| e.to_string())?;
    let t = ingest(file, &fixtures::cricket_schema(), &cal.hierarchy).map_err(|e| e.to_string())?;
    let oi = cal.descriptor("over_inning").map_err(|e| e.to_string())?;
    let t = t.augment(&cal.hierarchy, &[oi]).map_err(|e| e.to_string())?;
    let max = t.cyclic_column("over_inning").unwrap().values.iter().map(|v| v.0).max().unwrap_or(0);
    ensure!(max < 20, "over_inning reaches {max}");
    Ok(format!("periods 20, 2, k(match, season); 6 descriptors; {} balls with over_inning in [0, {}]", t.len(), max))
}

fn determinism() -> Outcome {
    let dir = fixture_dir();
    let cfg = dir.join("smart_meter.toml");
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for r in &runs {
        let o = p(r.path());
        let c = p(&cfg);
        run_cli(&["--config", c, "--out-dir", o, "harmony"])?;
        let cells = ["--x", "hour_day", "--facet", "wknd_wday", "--response", "general_supply_kwh"];
        run_cli(&[&["--config", c, "--out-dir", o, "summarize"][..], &cells].concat())?;
        run_cli(&[&["--config", c, "--out-dir", o, "plot-spec"][..], &cells].concat())?;
    }
    let files = ["harmony.csv", "summaries.csv", "recommendation.json", "plot_spec.json"];
    for f in files {
        let a = std::fs::read(runs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(runs[1].path().join(f)).map_err(|e| e.to_string())?;
        ensure!(a == b, "{f} differs between runs");
    }
    Ok(format!("{} byte-identical across runs", files.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("periods of minute/hour/day/week spans", periods_of_spans),
        ("harmony table on the half-hourly fixture", harmony_on_fixture),
        ("clash evidence and full-year harmony", clash_evidence),
        ("near-clash of day_year x day_week over 28 years", near_clash_28_years),
        ("oracle equivalence, Gregorian hours and Mayan kin", oracle_equivalence),
        ("reduce/compose round trip on the Mayan ladder", mayan_round_trip),
        ("quasi-circular bounds 2012-2015", quasi_bounds),
        ("quantiles against the sort-based oracle", quantile_correctness),
        ("cricket hierarchy", cricket),
        ("byte-identical CLI outputs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
