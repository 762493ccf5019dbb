//! Regenerates the files under `fixtures/`.
//!
//! ```text
//! cargo run -p matxai-cli --example make_fixtures -- crates/cli/fixtures
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use matxai_cli::io::emit_matrix;
use matxai_core::models::{synth_distill_fixture, synth_model_fixture, ModelKind};
use matxai_core::{Model, RealMatrix};

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("{name}: {e}"));
}

fn row(v: &[f64]) -> String {
    emit_matrix(&RealMatrix::new(1, v.len(), v.to_vec()).expect("nonempty"))
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir).expect("fixture directory");

    let d = synth_distill_fixture(7, 8, 8).expect("fixture");
    write(&dir, "distill_x.csv", &emit_matrix(&d.x));
    write(&dir, "distill_y.csv", &emit_matrix(&d.y));
    write(
        &dir,
        "delta_x.csv",
        &emit_matrix(&RealMatrix::delta(8, 8, 0, 0)),
    );
    write(&dir, "delta_y.csv", &emit_matrix(&d.kernel));
    write(
        &dir,
        "constant_x.csv",
        &emit_matrix(&RealMatrix::from_fn(8, 8, |_, _| 1.0)),
    );

    for (name, kind) in [
        ("linear", ModelKind::Linear),
        ("logistic", ModelKind::Logistic),
        ("polynomial", ModelKind::Polynomial),
        ("conv2d", ModelKind::Conv2dScore),
    ] {
        let f = synth_model_fixture(kind, 11, (2, 3)).expect("fixture");
        write(&dir, &format!("{name}.json"), &(f.model.to_json() + "\n"));
        if name == "linear" {
            write(&dir, "x6.csv", &row(&f.x));
            write(&dir, "baseline6.csv", &row(&f.baseline));
        }
    }

    let wide = Model::Linear {
        weights: (1..=21).map(|i| i as f64 / 10.0).collect(),
        bias: 0.0,
    };
    write(&dir, "linear21.json", &(wide.to_json() + "\n"));
    write(&dir, "x21.csv", &row(&[1.0; 21]));
}
