//! A self-contained invariant suite run by `glauber verify`. Each check
//! compares an implementation against an exact computation or a structural
//! property and reports one line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contours::{extract, reconstruct, sign_changes};
use crate::dynamics::{run, CensorSchedule, ChainSpec, CoupledEnsemble};
use crate::error::Result;
use crate::exact::{dominates, perturbation_constant, tv, ExactModel, MIX_EPS};
use crate::experiments::{log_partition_transfer, mixed_bc};
use crate::gibbs::{
    energy, heatbath_plus_prob, leq, local_field, sample_bc, BcDistribution, BoundaryCondition, PhaseSpec,
    SpinConfig,
};
use crate::lattice::{boundary, Rect, Region, Site};
use crate::schedules::exact_fixtures;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn rect(w: u32, h: u32) -> Region {
    Region::from_rect(Rect::with_size(w, h).expect("positive size"))
}

/// Random `+/-1` b.c. on `region`.
pub fn random_bc(region: &Region, rng: &mut impl Rng) -> BoundaryCondition {
    BoundaryCondition::from_fn(region, |_| if rng.gen_bool(0.5) { 1 } else { -1 })
}

/// A random increasing function of the states of an `n`-site region, as a
/// vector indexed like the exact engine: a nonnegative combination of
/// indicators that all sites of a random subset are plus.
pub fn random_increasing(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let terms: Vec<(usize, f64)> = (0..1 + rng.gen_range(0..4))
        .map(|_| {
            let mask = (0..n).filter(|_| rng.gen_bool(0.4)).fold(0usize, |m, i| m | 1 << i);
            (mask, rng.gen::<f64>())
        })
        .collect();
    (0..1usize << n)
        .map(|k| terms.iter().filter(|(m, _)| k & m == *m).map(|(_, c)| c).sum())
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Runs every check at inverse temperature `beta`; `seed` drives the random
/// instances.
pub fn run_suite(beta: f64, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(check("single-site closed forms", || {
        let r = rect(1, 1);
        let m = ExactModel::build(&r, &BoundaryCondition::uniform(&r, 1), beta)?;
        let gap = m.spectral_gap()?;
        let tmix = m.mixing_time(MIX_EPS)?;
        let p = m.pi()[m.all_plus()];
        let want = (2.0 * std::f64::consts::E * p).ln().max(0.0);
        Ok((close(gap, 1.0, 1e-10) && (tmix - want).abs() < 1e-6, format!("gap={gap} tmix={tmix} expected={want}")))
    }));

    out.push(check("relaxation/mixing sandwich", || {
        let mut worst = f64::INFINITY;
        for (w, h) in [(2, 2), (2, 3), (3, 3)] {
            let r = rect(w, h);
            for bc in [BoundaryCondition::uniform(&r, 1), BoundaryCondition::free(&r), random_bc(&r, &mut rng)] {
                let m = ExactModel::build(&r, &bc, beta)?;
                let (tr, tm) = (m.relax_time()?, m.mixing_time(MIX_EPS)?);
                let hi = (2.0 * std::f64::consts::E / m.pi_star()).ln() * tr;
                worst = worst.min((tm - tr * (1.0 - 1e-6)).min(hi - tm));
            }
        }
        Ok((worst >= 0.0, format!("min slack {worst:.3e}")))
    }));

    out.push(check("reversibility", || {
        let r = rect(2, 3);
        let m = ExactModel::build(&r, &random_bc(&r, &mut rng), beta)?;
        let mut worst = 0.0f64;
        for a in 0..m.num_states() {
            for i in 0..m.num_sites() {
                let b = a ^ 1 << i;
                let d = (m.pi()[a] * m.rate(a, b) - m.pi()[b] * m.rate(b, a)).abs();
                worst = worst.max(d);
            }
        }
        Ok((worst <= 1e-12, format!("max flux imbalance {worst:.3e}")))
    }));

    out.push(check("semigroup", || {
        let r = rect(2, 3);
        let m = ExactModel::build(&r, &BoundaryCondition::per_side(&r, [-1, -1, 1, -1])?, beta)?;
        let mu = m.delta(m.all_plus());
        let a = m.evolve_full(&m.evolve_full(&mu, 0.7)?, 1.6)?;
        let b = m.evolve_full(&mu, 2.3)?;
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        Ok((d <= 1e-10, format!("max deviation {d:.3e}")))
    }));

    out.push(check("submultiplicativity", || {
        let r = rect(2, 3);
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let mut worst = f64::INFINITY;
        for bc in [
            BoundaryCondition::uniform(&r, 1),
            BoundaryCondition::uniform(&r, -1),
            BoundaryCondition::free(&r),
            BoundaryCondition::per_side(&r, [-1, -1, 1, -1])?,
        ] {
            let m = ExactModel::build(&r, &bc, beta)?;
            let g: Vec<f64> = grid.iter().map(|&t| m.gamma(t)).collect::<Result<_>>()?;
            for (i, &t) in grid.iter().enumerate() {
                for (j, &s) in grid.iter().enumerate() {
                    worst = worst.min(4.0 * g[i] * g[j] - m.gamma(t + s)? + 1e-12);
                }
            }
        }
        Ok((worst >= 0.0, format!("min slack {worst:.3e}")))
    }));

    out.push(check("coupling and mixing-time decay bounds", || {
        let r = rect(2, 2);
        let m = ExactModel::build(&r, &BoundaryCondition::per_side(&r, [1, -1, 1, -1])?, beta)?;
        let tmix = m.mixing_time(MIX_EPS)?;
        let mut ok = true;
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let sup = m.sup_tv(t)?;
            ok &= sup <= 2.0 * m.num_sites() as f64 * m.gamma(t)? + 1e-12;
            ok &= sup <= (2.0 * MIX_EPS).powi((t / tmix).floor() as i32) + 1e-12;
        }
        Ok((ok, format!("tmix={tmix:.4}")))
    }));

    out.push(check("FKG", || {
        let r = rect(2, 3);
        let m = ExactModel::build(&r, &random_bc(&r, &mut rng), beta)?;
        let mut worst = f64::INFINITY;
        for _ in 0..50 {
            let f = random_increasing(m.num_sites(), &mut rng);
            let g = random_increasing(m.num_sites(), &mut rng);
            let ef = m.expectation(m.pi(), |k| f[k]);
            let eg = m.expectation(m.pi(), |k| g[k]);
            let efg = m.expectation(m.pi(), |k| f[k] * g[k]);
            worst = worst.min(efg - ef * eg);
        }
        Ok((worst >= -1e-12, format!("min covariance {worst:.3e}")))
    }));

    out.push(check("b.c. monotonicity of the Gibbs measure", || {
        let r = rect(2, 3);
        let mut ok = true;
        for _ in 0..5 {
            let lo = random_bc(&r, &mut rng);
            let mut hi = lo.clone();
            for (s, _) in lo.iter() {
                if rng.gen_bool(0.5) {
                    hi.set(s, 1)?;
                }
            }
            let a = ExactModel::build(&r, &lo, beta)?;
            let b = ExactModel::build(&r, &hi, beta)?;
            ok &= dominates(b.pi(), a.pi(), r.len())?;
        }
        Ok((ok, "5 random pairs".into()))
    }));

    out.push(check("perturbation constants", || {
        let r = rect(2, 3);
        let mut ok = true;
        let mut detail = String::new();
        for k in 1..=3usize {
            let base = random_bc(&r, &mut rng);
            let mut pert = base.clone();
            let sites: Vec<Site> = boundary(&r);
            let delta: Vec<Site> = (0..k).map(|_| sites[rng.gen_range(0..sites.len())]).collect();
            for &s in &delta {
                pert.set(s, -base.get(s).unwrap())?;
            }
            let n_delta = delta.iter().collect::<std::collections::BTreeSet<_>>().len();
            let a = ExactModel::build(&r, &pert, beta)?;
            let b = ExactModel::build(&r, &base, beta)?;
            let mm = perturbation_constant(&a, &b)?;
            ok &= mm <= (8.0 * beta * n_delta as f64).exp() * (1.0 + 1e-12);
            ok &= a.relax_time()? <= mm.powi(3) * b.relax_time()? * (1.0 + 1e-10);
            detail = format!("last M={mm:.4}");
        }
        Ok((ok, detail))
    }));

    out.push(check("free-b.c. bottleneck", || {
        let r = rect(2, 2);
        let m = ExactModel::build(&r, &BoundaryCondition::free(&r), beta)?;
        let (bound, tr) = m.bottleneck_check()?;
        Ok((bound <= tr * (1.0 + 1e-10), format!("bound={bound:.4} T_relax={tr:.4}")))
    }));

    out.push(check("censoring inequality on fixtures", || {
        let mut ok = true;
        let mut names = Vec::new();
        for fx in exact_fixtures(1.0)? {
            let bc = BoundaryCondition::per_side(&fx.region, [-1, -1, 1, -1])?;
            let m = ExactModel::build(&fx.region, &bc, beta)?;
            for (start, sched) in [(m.all_plus(), &fx.plus), (m.all_minus(), &fx.minus)] {
                let mu0 = m.delta(start);
                let full = m.evolve_full(&mu0, sched.total_time())?;
                let cens = m.evolve_schedule(&mu0, sched)?;
                let here = tv(&full, m.pi()) <= tv(&cens, m.pi()) + 1e-10
                    && if start == m.all_plus() {
                        dominates(&cens, &full, m.num_sites())? && m.mlr_increasing(&full)
                    } else {
                        dominates(&full, &cens, m.num_sites())? && m.mlr_decreasing(&full)
                    };
                ok &= here;
                if !here {
                    names.push(fx.name);
                }
            }
        }
        Ok((ok, if names.is_empty() { "5 fixtures".into() } else { format!("failed: {names:?}") }))
    }));

    out.push(check("grand-coupling monotonicity", || {
        let r = rect(4, 4);
        let mut violations = 0;
        for k in 0..40 {
            let lo_bc = random_bc(&r, &mut rng);
            let mut hi_bc = lo_bc.clone();
            for (s, _) in lo_bc.iter() {
                if rng.gen_bool(0.3) {
                    hi_bc.set(s, 1)?;
                }
            }
            let lo = SpinConfig::from_index(&r, rng.gen::<u64>() & 0xffff);
            let mut hi = lo.clone();
            for i in 0..hi.len() {
                if rng.gen_bool(0.3) {
                    hi.set(i, 1);
                }
            }
            let ens = CoupledEnsemble {
                seed: seed.wrapping_add(k),
                region: r.clone(),
                beta,
                chains: vec![
                    ChainSpec { init: lo, bc: lo_bc, schedule: None },
                    ChainSpec { init: hi, bc: hi_bc, schedule: None },
                ],
            };
            let taps: Vec<f64> = (1..=10).map(|j| f64::from(j) * 0.5).collect();
            let o = run(&ens, 5.0, &taps)?;
            violations += o.taps.iter().filter(|t| !leq(&t[0], &t[1])).count();
        }
        Ok((violations == 0, format!("{violations} violations")))
    }));

    out.push(check("full-mask censoring is no censoring", || {
        let r = rect(3, 3);
        let bc = BoundaryCondition::per_side(&r, [-1, -1, 1, -1])?;
        let spec = |s| ChainSpec { init: SpinConfig::all_plus(&r), bc: bc.clone(), schedule: s };
        let ens = CoupledEnsemble {
            seed,
            region: r.clone(),
            beta,
            chains: vec![spec(None), spec(Some(CensorSchedule::trivial(&r, 6.0)?))],
        };
        let o = run(&ens, 6.0, &[1.0, 3.0])?;
        let again = run(&ens, 6.0, &[1.0, 3.0])?;
        Ok((o.finals[0] == o.finals[1] && o.taps.iter().all(|t| t[0] == t[1]) && o == again, "identical".into()))
    }));

    out.push(check("energy flip identity", || {
        let r = rect(3, 3);
        let bc = random_bc(&r, &mut rng);
        let mut ok = true;
        for k in 0..1u64 << 9 {
            let c = SpinConfig::from_index(&r, k);
            let e = energy(&c, &bc)?;
            for i in 0..9 {
                let mut d = c.clone();
                d.set(i, -c.get(i));
                let s = f64::from(local_field(&c, &bc, i));
                ok &= (energy(&d, &bc)? - e - 2.0 * f64::from(c.get(i)) * s).abs() < 1e-12;
            }
        }
        Ok((ok, "3x3 exhaustive".into()))
    }));

    out.push(check("heat-bath probability is monotone", || {
        let ok = (-4..4).all(|s| heatbath_plus_prob(s, beta) <= heatbath_plus_prob(s + 1, beta));
        Ok((ok, format!("p+(0)={}", heatbath_plus_prob(0, beta))))
    }));

    out.push(check("pinned b.c. agrees with base off the pin", || {
        let r = rect(3, 3);
        let base = BcDistribution::PerSide([
            PhaseSpec::PlusPhaseSample { buffer: 2, sweeps: 3 },
            PhaseSpec::AllMinus,
            PhaseSpec::MinusPhaseSample { buffer: 2, sweeps: 3 },
            PhaseSpec::AllPlus,
        ]);
        let delta = vec![Site::new(2, 0)];
        let pinned = BcDistribution::PinnedDelta { base: Box::new(base.clone()), delta: delta.clone(), value: -1 };
        let mut ok = true;
        for s in 0..5 {
            let a = sample_bc(&base, &r, beta, s)?;
            let b = sample_bc(&pinned, &r, beta, s)?;
            ok &= a.iter().all(|(x, v)| b.get(x) == Some(if delta.contains(&x) { -1 } else { v }));
        }
        Ok((ok, "5 seeds".into()))
    }));

    out.push(check("contour round trip", || {
        let mut ok = true;
        for (r, bc) in [
            (rect(3, 3), BoundaryCondition::uniform(&rect(3, 3), 1)),
            (rect(2, 4), BoundaryCondition::per_side(&rect(2, 4), [-1, -1, 1, -1])?),
        ] {
            let m = sign_changes(&bc, &r)?;
            for k in 0..1u64 << r.len() {
                let c = SpinConfig::from_index(&r, k);
                let set = extract(&c, &bc)?;
                ok &= reconstruct(&set, &bc)? == c && 2 * set.open.len() == m;
            }
        }
        Ok((ok, "3x3 plus, 2x4 (-,-,+,-)".into()))
    }));

    out.push(check("transfer matrix against enumeration", || {
        let (r, bc) = mixed_bc(3, 0.4)?;
        let lz = log_partition_transfer(3, &bc, beta)?;
        let logs: Vec<f64> = (0..1u64 << 9)
            .map(|k| energy(&SpinConfig::from_index(&r, k), &bc).map(|e| -beta * e))
            .collect::<Result<_>>()?;
        let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let want = mx + logs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
        Ok((close(lz, want, 1e-10), format!("{lz} vs {want}")))
    }));

    out
}
