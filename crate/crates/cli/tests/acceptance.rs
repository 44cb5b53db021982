//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use chessboard::analysis::{compare_slice, compare_to_expectation, sampler_kernel, sign_changes};
use chessboard::cone::LightCone;
use chessboard::montecarlo::loop_rng;
use chessboard::twin::{meeting_points, verify_entwined};
use chessboard::*;
use chessboard_cli::{cmd_simulate, SimulateArgs};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

fn kernel_oracle() -> Outcome {
    let mut cells = 0usize;
    for t_max in 1..=14 {
        for a in [0.0, 0.25, 0.5, 1.0] {
            for start in Direction::BOTH {
                let params = KernelParams::new(t_max, a);
                let dp = kernel_table(params, start).map_err(|e| e.to_string())?;
                let brute = enumerate_kernel(params, start).map_err(|e| e.to_string())?;
                for t in 1..=t_max {
                    for site in LightCone::slice(t) {
                        for end in Direction::BOTH {
                            if dp.is_reachable(site, end) != brute.is_reachable(site, end) {
                                return Err(format!("reachability differs at {site} {end:?}"));
                            }
                            let (u, v) = (dp.cell(site, end), brute.cell(site, end));
                            if (0..4).any(|r| (u.w[r] - v.w[r]).abs() > 1e-12) {
                                return Err(format!(
                                    "t_max={t_max} a={a} start={start:?} {site} {end:?}: {:?} vs {:?}",
                                    u.w, v.w
                                ));
                            }
                            cells += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{cells} cells agree within 1e-12"))
}

fn complex_readout() -> Outcome {
    let mut rng = loop_rng(2024, 0);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for convention in [Convention::Feynman, Convention::Gersch] {
        let sign = match convention {
            Convention::Feynman => 1.0,
            Convention::Gersch => -1.0,
        };
        for _ in 0..1000 {
            let t_max = rng.random_range(1..=24usize);
            let a = rng.random_range(0.0..2.0);
            let start = if rng.random_bool(0.5) { Direction::Plus } else { Direction::Minus };
            let table = kernel_table(KernelParams::new(t_max, a).with_convention(convention), start)
                .map_err(|e| e.to_string())?;
            let reachable: Vec<_> = table.cells().collect();
            let (site, end, cell) = reachable[rng.random_range(0..reachable.len())];
            let k = complex_kernel(&table, site, end);
            let re = cell.w[0] - cell.w[2];
            let im = sign * (cell.w[1] - cell.w[3]);
            worst = worst.max((k.re - re).abs()).max((k.im - im).abs());
            checked += 1;
        }
    }
    if worst <= 1e-15 {
        Ok(format!("{checked} cells, max deviation {worst:e}"))
    } else {
        Err(format!("max deviation {worst:e}"))
    }
}

fn sorted_lengths(p: &Path) -> Vec<usize> {
    let mut v: Vec<_> = p.to_legs().legs().iter().map(|l| l.len).collect();
    v.sort_unstable();
    v
}

fn twin_properties() -> Outcome {
    let ps = [0.1, 0.5, 0.9];
    for i in 0..10_000u64 {
        let mut rng = loop_rng(99, i);
        let n = rng.random_range(1..=64usize);
        let p = ps[(i % 3) as usize];
        let path = sample_path(n, p, &mut rng);
        let fail = |what: &str| Err(format!("{what} fails for {path} (p={p})"));

        let ext = extend_even(&path);
        let twin = orthogonal_twin(&path);
        if sorted_lengths(&twin) != sorted_lengths(&ext) {
            return fail("leg permutation");
        }
        if twin.endpoint() != ext.endpoint() || twin.first() == path.first() {
            return fail("endpoint");
        }
        if path.corner_count() % 2 == 1 && orthogonal_twin(&twin) != path {
            return fail("involution");
        }
        let meets = meeting_points(&path, &twin).map_err(|e| format!("{path}: {e}"))?;
        if meets.len() != ext.corner_count().div_ceil(2) {
            return fail("meeting count");
        }
        let (pa, pb) = (ext.positions(), twin.positions());
        let mut boundary = 0;
        for (k, pair) in ext.to_legs().legs().chunks(2).enumerate() {
            boundary += pair[0].len + pair[1].len;
            if meets[k] != pa[boundary] || meets[k] != pb[boundary] {
                return fail("meeting sites");
            }
        }
        let lp = entwine(&path);
        verify_entwined(&path, &lp).map_err(|e| format!("{path}: {e}"))?;
    }
    Ok("10000 paths".into())
}

fn mc_vs_expectation() -> Outcome {
    let config = SimConfig {
        n_steps: 12,
        corner_prob: 0.5,
        loops: 1_000_000,
        seed: 20240612,
        workers: workers(),
    };
    let lattice = run(&config).map_err(|e| e.to_string())?;
    if !lattice.is_neutral() {
        return Err("a slice is not neutral".into());
    }
    let expected = expected_lattice(12, 0.5).map_err(|e| e.to_string())?;
    let cells = compare_to_expectation(&lattice, &expected).map_err(|e| e.to_string())?;
    let scored: Vec<_> = cells.iter().filter(|c| c.expected.abs() > 1e-3).collect();
    let worst = scored
        .iter()
        .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
        .ok_or("no cells above threshold")?;
    let msg = format!(
        "{} cells, max |z| {:.3} at {} {:?} {}",
        scored.len(),
        worst.z.abs(),
        worst.site,
        worst.sigma,
        worst.channel
    );
    if worst.z.abs() <= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn kernel_link() -> Outcome {
    let n = 14;
    let mut worst = 0.0f64;
    for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let expected = expected_lattice(n, p).map_err(|e| e.to_string())?;
        let table = sampler_kernel(p, n).map_err(|e| e.to_string())?;
        for t in 1..=n {
            let q = (1.0f64 - p).powi(t as i32 - 1);
            for site in LightCone::slice(t) {
                for sigma in Direction::BOTH {
                    let want = q * signed_kernel(&table.cell(site, sigma));
                    worst = worst.max((expected.mean(site, sigma, Channel::A) - want).abs());
                }
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max deviation {worst:e}"))
    } else {
        Err(format!("max deviation {worst:e}"))
    }
}

fn slice_profile() -> Outcome {
    let config = SimConfig {
        n_steps: 30,
        corner_prob: 0.5,
        loops: 10_000_000,
        seed: 15,
        workers: workers(),
    };
    let lattice = run(&config).map_err(|e| e.to_string())?;
    let cmp = compare_slice(&lattice, 15).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = cmp.entries.iter().map(|e| e.exact).collect();
    let mc: Vec<f64> = cmp.entries.iter().map(|e| e.scaled_mc).collect();
    let (exact_changes, mc_changes) = (sign_changes(&exact, 0.0), sign_changes(&mc, 0.0));
    let msg = format!(
        "max |z| {:.3}, reduced chi2 {:.3}, sign changes {mc_changes} (exact {exact_changes})",
        cmp.max_abs_z(),
        cmp.reduced_chi2
    );
    if cmp.max_abs_z() <= 5.0 && mc_changes >= 4 && mc_changes == exact_changes {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn simulate_files(workers: u64, loops: u64) -> std::result::Result<BTreeMap<String, Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let args = SimulateArgs {
        steps: 16,
        corner_prob: 0.35,
        loops,
        seed: 7,
        workers,
        out: dir.path().to_path_buf(),
    };
    cmd_simulate(&args, &mut std::io::sink()).map_err(|e| e.to_string())?;
    let mut files = BTreeMap::new();
    for name in ["counts.csv", "counts.meta.json"] {
        let bytes = fs::read(dir.path().join(name)).map_err(|e| e.to_string())?;
        files.insert(name.to_string(), bytes);
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let first = simulate_files(4, 100_000)?;
    let again = simulate_files(4, 100_000)?;
    if first != again {
        return Err("repeated runs differ".into());
    }
    let single = simulate_files(1, 100_000)?;
    if single["counts.csv"] != first["counts.csv"] {
        return Err("1-worker and 4-worker counts differ".into());
    }
    let config = |workers| SimConfig {
        n_steps: 16,
        corner_prob: 0.35,
        loops: 100_000,
        seed: 7,
        workers,
    };
    let (a, b) = (
        run(&config(1)).map_err(|e| e.to_string())?,
        run(&config(4)).map_err(|e| e.to_string())?,
    );
    if a.cells().ne(b.cells()) {
        return Err("1-worker and 4-worker lattices differ".into());
    }
    Ok(format!("{} identical CSV bytes", first["counts.csv"].len()))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "kernel recursion equals enumeration", limit: Duration::from_secs(10), check: kernel_oracle },
        Criterion { id: 2, name: "complex readout of the kernel", limit: Duration::from_secs(10), check: complex_readout },
        Criterion { id: 3, name: "twin and entwined-loop properties", limit: Duration::from_secs(30), check: twin_properties },
        Criterion { id: 4, name: "simulation against expectation", limit: Duration::from_secs(60), check: mc_vs_expectation },
        Criterion { id: 5, name: "channel A kernel link", limit: Duration::from_secs(30), check: kernel_link },
        Criterion { id: 6, name: "n=30 slice t=15 profile", limit: Duration::from_secs(600), check: slice_profile },
        Criterion { id: 7, name: "deterministic output", limit: Duration::from_secs(60), check: determinism },
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let started = Instant::now();
        let outcome = (c.check)();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.limit => Err(format!("{msg}; took longer than {:?}", c.limit)),
            other => other,
        };
        let (status, msg) = match &outcome {
            Ok(msg) => ("PASS", msg),
            Err(msg) => ("FAIL", msg),
        };
        println!("criterion {} {status} {} ({elapsed:.1?}): {msg}", c.id, c.name);
        if outcome.is_err() {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
