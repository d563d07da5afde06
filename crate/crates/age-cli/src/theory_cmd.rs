//! The `verify-theory` harness: fixed worked examples plus seeded random
//! instances, each certified exhaustively, with human-readable and JSON
//! certificates.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use age_core::theory::{
    certify_game1_saddles, certify_game2_saddles, random_feasible_instance, verify_lemma_all_e,
    verify_lemma_inverse, verify_reciprocity, FiniteDistribution, FiniteMap, SaddleReport,
    TheoryInstance,
};

use crate::{info, CliError, EXIT_BAD_INPUT};

#[derive(Serialize)]
pub struct Certificate {
    pub instance: String,
    pub saddle_count: usize,
    pub all_aligned: bool,
    pub value: f64,
    pub violations: Vec<String>,
}

fn certificate_from_game(name: &str, report: &SaddleReport) -> Certificate {
    Certificate {
        instance: format!("{name}#game{}", report.game),
        saddle_count: report.saddle_count,
        all_aligned: report.all_saddles_aligned,
        value: report.value.unwrap_or(0.0),
        violations: report.violations.clone(),
    }
}

fn check_certificate(cert: &Certificate, total_violations: &mut usize) {
    *total_violations += cert.violations.len();
    let status = if cert.violations.is_empty() { "OK" } else { "VIOLATION" };
    info(&format!(
        "{:<44} saddles {:3}  aligned {:5}  value {:+.3e}  {status}",
        cert.instance, cert.saddle_count, cert.all_aligned, cert.value
    ));
    for v in &cert.violations {
        eprintln!("  violation: {v}");
    }
}

fn push_simple(
    certs: &mut Vec<Certificate>,
    total: &mut usize,
    name: String,
    violations: Vec<String>,
) {
    let cert = Certificate {
        instance: name,
        saddle_count: 0,
        all_aligned: violations.is_empty(),
        value: 0.0,
        violations,
    };
    check_certificate(&cert, total);
    certs.push(cert);
}

fn certify_instance(
    name: &str,
    inst: &TheoryInstance,
    certs: &mut Vec<Certificate>,
    total: &mut usize,
) -> Result<(), CliError> {
    let map_err = |e: age_core::Error| CliError::new(EXIT_BAD_INPUT, e.to_string());

    let r1 = certify_game1_saddles(&inst.x, &inst.z).map_err(map_err)?;
    let c1 = certificate_from_game(name, &r1);
    check_certificate(&c1, total);
    certs.push(c1);

    let r2 = certify_game2_saddles(&inst.x, &inst.z, &inst.y).map_err(map_err)?;
    let mut c2 = certificate_from_game(name, &r2);
    // The two games characterize the same aligned generators whenever the
    // perfect-encoder hypothesis holds.
    if r2.perfect_encoder_exists {
        let g1: std::collections::BTreeSet<usize> =
            r1.saddle_pairs.iter().map(|&(g, _)| g).collect();
        let g2: std::collections::BTreeSet<usize> =
            r2.saddle_pairs.iter().map(|&(g, _)| g).collect();
        if g1 != g2 {
            c2.violations.push("games 1 and 2 disagree on the saddle generator set".into());
        }
    }
    check_certificate(&c2, total);
    certs.push(c2);

    let inverse = verify_lemma_inverse(&inst.x, &inst.z).map_err(map_err)?;
    push_simple(certs, total, format!("{name}#lemma-inverse"), inverse.violations);
    Ok(())
}

pub fn cmd_verify_theory(
    max_k: usize,
    trials: usize,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<bool, CliError> {
    if !(2..=4).contains(&max_k) {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            format!("max-k must be between 2 and 4, got {max_k}"),
        ));
    }
    let mut certs: Vec<Certificate> = Vec::new();
    let mut total_violations = 0usize;
    let map_err = |e: age_core::Error| CliError::new(EXIT_BAD_INPUT, e.to_string());

    // Fixed worked examples.
    let u2 = FiniteDistribution::uniform(2);
    let point = FiniteDistribution::point_mass(2, 0);
    let fixed = [
        ("fixed-uniform2", TheoryInstance { name: "fixed".into(), x: u2.clone(), z: u2.clone(), y: u2.clone() }),
        ("fixed-pointmass", TheoryInstance { name: "fixed".into(), x: point, z: u2.clone(), y: u2.clone() }),
    ];
    for (name, inst) in &fixed {
        certify_instance(name, inst, &mut certs, &mut total_violations)?;
    }

    // A deliberately infeasible target: flagged, not asserted.
    let skewed = FiniteDistribution::new(vec![0.7, 0.3]).map_err(map_err)?;
    let r = certify_game1_saddles(&skewed, &u2).map_err(map_err)?;
    let mut cert = certificate_from_game("fixed-infeasible", &r);
    if r.feasible {
        cert.violations.push("instance (0.7, 0.3) vs uniform should be infeasible".into());
    }
    check_certificate(&cert, &mut total_violations);
    certs.push(cert);

    // Lemma: separating maps exist exactly for unequal pairs.
    let lemma_pairs = [
        ("lemma-equal", u2.clone(), u2.clone()),
        (
            "lemma-unequal",
            FiniteDistribution::new(vec![0.6, 0.4]).map_err(map_err)?,
            u2.clone(),
        ),
    ];
    for (name, x, y) in &lemma_pairs {
        let report = verify_lemma_all_e(x, y).map_err(map_err)?;
        let violations = if report.holds {
            Vec::new()
        } else {
            vec!["pushforward-separation lemma failed".to_string()]
        };
        push_simple(&mut certs, &mut total_violations, name.to_string(), violations);
    }

    // Reciprocity: a bijection pair and a hypothesis-violating pair.
    {
        let w = FiniteDistribution::uniform(3);
        let f = FiniteMap::new(vec![2, 0, 1], 3).map_err(map_err)?;
        let h = FiniteMap::new(vec![1, 2, 0], 3).map_err(map_err)?;
        let report = verify_reciprocity(&w, &f, &h).map_err(map_err)?;
        let mut violations = report.violations.clone();
        if !report.hypothesis_holds {
            violations.push("bijection pair should satisfy the hypothesis".into());
        }
        push_simple(&mut certs, &mut total_violations, "reciprocity-bijection".into(), violations);

        let h_bad = FiniteMap::new(vec![0, 0, 0], 3).map_err(map_err)?;
        let report = verify_reciprocity(&w, &f, &h_bad).map_err(map_err)?;
        let violations = if report.hypothesis_holds {
            vec!["collapsing h cannot satisfy the hypothesis".to_string()]
        } else {
            report.violations.clone()
        };
        push_simple(&mut certs, &mut total_violations, "reciprocity-hypothesis-fail".into(), violations);
    }

    // Random feasible instances.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let inst = random_feasible_instance(max_k, &mut rng);
        let name = format!("{}#{t}", inst.name);
        certify_instance(&name, &inst, &mut certs, &mut total_violations)?;

        // Reciprocity on a random instance: an injective transport and its
        // left inverse over the instance's latent distribution.
        let k_z = inst.z.len();
        let k_x = inst.x.len();
        let mut targets: Vec<usize> = (0..k_x).collect();
        for i in (1..targets.len()).rev() {
            let j = rng.gen_range(0..=i);
            targets.swap(i, j);
        }
        targets.truncate(k_z);
        let f = FiniteMap::new(targets.clone(), k_x).map_err(map_err)?;
        let mut back = vec![0usize; k_x];
        for (src, &dst) in targets.iter().enumerate() {
            back[dst] = src;
        }
        let h = FiniteMap::new(back, k_z).map_err(map_err)?;
        let report = verify_reciprocity(&inst.z, &f, &h).map_err(map_err)?;
        let mut violations = report.violations.clone();
        if !report.hypothesis_holds {
            violations.push("constructed left inverse must satisfy the hypothesis".into());
        }
        push_simple(&mut certs, &mut total_violations, format!("{name}#reciprocity"), violations);
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("out dir: {e}")))?;
        let path = dir.join("theory_certificates.json");
        let body = serde_json::to_vec_pretty(&certs)
            .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
        std::fs::write(&path, body)
            .map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("cannot write {}: {e}", path.display())))?;
        info(&format!("certificates written to {}", path.display()));
    }

    println!(
        "{}",
        serde_json::json!({
            "instances": certs.len(),
            "violations": total_violations,
        })
    );
    Ok(total_violations == 0)
}
