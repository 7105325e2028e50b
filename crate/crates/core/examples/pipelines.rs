//! Both end-to-end pipelines with manifests written to a temporary directory.

use thinsets::experiments::{run_thm31, run_thm41, ExperimentConfig, ExperimentKind, SHIPPED_SEED};

fn main() -> thinsets::Result<()> {
    let dir = std::env::temp_dir().join("thinsets-pipelines");
    for kind in [ExperimentKind::Thm31, ExperimentKind::Thm41] {
        let mut cfg = ExperimentConfig::new(kind, SHIPPED_SEED);
        cfg.output_dir = Some(dir.clone());
        let manifest = match kind {
            ExperimentKind::Thm31 => run_thm31(&cfg)?,
            _ => run_thm41(&cfg)?,
        };
        println!("{}: passed = {}", kind.name(), manifest.passed);
        for s in &manifest.steps {
            println!(
                "  step {:<22} {:>7.2}s {:?}",
                s.name, s.wall_seconds, s.files
            );
        }
        for a in &manifest.assertions {
            println!("  {:<24} {:?} {:?}", a.name, a.status, a.value);
        }
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
