//! Fast property checks runnable from the command line.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{EffectiveChannel, ParamSpace, Parametrization, VaractorModel};
use crate::config::NetworkConfig;
use crate::error::Result;
use crate::sumrate::{cogradient, sumrate};
use crate::testing::{random_channel, random_matrix, random_precoder};
use crate::wmmse::{wmmse_solve, OracleConfig};
use crate::zo::{quasi_gradient, ProbeDraw};

type Check = fn(&mut ChaCha8Rng) -> std::result::Result<(), String>;

fn cogradient_matches_finite_differences(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    for _ in 0..20 {
        let cfg = NetworkConfig::new(3, 3, 1, 1.0, 0.1);
        let h = random_channel(rng, 3, 3);
        let w = random_precoder(rng, 3, 3, 1.0);
        let g = cogradient(&w, &h, &cfg).map_err(|e| e.to_string())?;
        let dir = random_matrix(rng, 3, 3);
        let tau = 1e-6;
        let f = |s: f64| sumrate(&w, &EffectiveChannel::new(&h.h + dir.map(|z| z * s)), &cfg).map(|v| v.value);
        let fd = (f(tau).map_err(|e| e.to_string())? - f(-tau).map_err(|e| e.to_string())?) / (2.0 * tau);
        let an = 2.0 * g.g.zip_map(&dir, |a, b| (a.conj() * b).re).sum();
        if (fd - an).abs() > 1e-5 * (1.0 + an.abs()) {
            return Err(format!("finite difference {fd} vs analytic {an}"));
        }
    }
    Ok(())
}

fn wmmse_ascends_and_stays_feasible(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    for _ in 0..20 {
        let cfg = NetworkConfig::new(4, 3, 1, 2.0, 0.05);
        let h = random_channel(rng, 4, 3);
        let rep = wmmse_solve(&h, &cfg, &OracleConfig::with_budget(30), None).map_err(|e| e.to_string())?;
        if rep.sumrate_trace.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-9)) {
            return Err("sumrate decreased".into());
        }
        if !rep.precoder.is_feasible() {
            return Err("precoder exceeds the power budget".into());
        }
    }
    Ok(())
}

fn single_user_optimum(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let (p, noise) = (2.0, 0.3);
    let cfg = NetworkConfig::new(4, 1, 1, p, noise);
    let h = random_channel(rng, 4, 1);
    let rep = wmmse_solve(&h, &cfg, &OracleConfig::with_budget(3), None).map_err(|e| e.to_string())?;
    let best = (1.0 + p * h.h.norm_squared() / noise).log2();
    if (rep.achieved_sumrate - best).abs() > 1e-8 {
        return Err(format!("{} vs closed form {best}", rep.achieved_sumrate));
    }
    Ok(())
}

fn quasi_gradient_is_collinear(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let u = ProbeDraw::sample(rng, 16);
    let plus = random_channel(rng, 2, 2);
    let minus = random_channel(rng, 2, 2);
    let g = crate::sumrate::CoGradient { g: random_matrix(rng, 2, 2) };
    let d = quasi_gradient(&plus, &minus, &u, 1e-3, &g).map_err(|e| e.to_string())?;
    let (dn, un) = (norm(&d.d), norm(&u.u));
    let cos = d.d.iter().zip(&u.u).map(|(a, b)| a * b).sum::<f64>() / (dn * un);
    if (cos.abs() - 1.0).abs() > 1e-12 {
        return Err(format!("|cos(D, U)| = {}", cos.abs()));
    }
    Ok(())
}

fn reflections_are_passive(rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let ideal = ParamSpace::ideal_phase(32);
    let gamma = ideal.reflection(&ideal.random_theta(rng)).map_err(|e| e.to_string())?;
    if gamma.iter().any(|g: &Complex64| (g.norm() - 1.0).abs() > 1e-12) {
        return Err("ideal phase reflection is not unit modulus".into());
    }
    let var = ParamSpace::new(Parametrization::Varactor(VaractorModel::default()), 32);
    let gamma = var.reflection(&var.random_theta(rng)).map_err(|e| e.to_string())?;
    if gamma.iter().any(|g| g.norm() > 1.0) {
        return Err("varactor reflection exceeds unit modulus".into());
    }
    Ok(())
}

fn full_scale_link_count(_: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    let n = NetworkConfig::new(6, 32, 1000, 1.0, 1.0).cascaded_link_count();
    if n == 38_192 {
        Ok(())
    } else {
        Err(format!("{n} links"))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const CHECKS: [(&str, Check); 6] = [
    ("co-gradient vs finite differences", cogradient_matches_finite_differences),
    ("WMMSE monotone ascent and feasibility", wmmse_ascends_and_stays_feasible),
    ("single-user closed-form optimum", single_user_optimum),
    ("quasi-gradient collinear with probe", quasi_gradient_is_collinear),
    ("passive reflection coefficients", reflections_are_passive),
    ("cascaded link count at --scale paper", full_scale_link_count),
];

/// Runs every check, printing one line each. Returns whether all passed.
pub fn run_selftest<W: Write>(out: &mut W) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E1F);
    let mut ok = true;
    for (name, check) in CHECKS {
        match check(&mut rng) {
            Ok(()) => writeln!(out, "ok    {name}")?,
            Err(e) => {
                ok = false;
                writeln!(out, "FAIL  {name}: {e}")?
            }
        }
    }
    Ok(ok)
}
