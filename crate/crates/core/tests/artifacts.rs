//! File formats written by the experiment drivers.

use sparse_heat::experiments::{reconstruct, ExperimentConfig};
use sparse_heat::{DiscreteMeasure, TriMesh};

fn small_reconstruction(dir: &std::path::Path) -> sparse_heat::experiments::ReconstructionReport {
    let config = ExperimentConfig {
        mesh_n: 16,
        time_steps: 16,
        output_dir: Some(dir.to_path_buf()),
        ..ExperimentConfig::default()
    };
    reconstruct(&config).unwrap()
}

#[test]
fn measure_json_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let report = small_reconstruction(dir.path());
    for (file, expected) in [("measure.json", &report.measure), ("measure_lumped.json", &report.lumped.measure)] {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for atom in value.as_array().unwrap() {
            let keys: Vec<_> = atom.as_object().unwrap().keys().cloned().collect();
            assert_eq!(keys, ["beta", "x"]);
        }
        let back = DiscreteMeasure::read_json(text.as_bytes()).unwrap();
        assert_eq!(&back, expected);
    }
}

#[test]
fn log_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let report = small_reconstruction(dir.path());
    let text = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,phi,objective,support_size,new_node,subproblem_iters"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), report.log.records.len());
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 6);
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
        let phi: f64 = row[1].parse().unwrap();
        assert!(phi >= 0.0);
    }
    assert_eq!(rows.last().unwrap()[4], "");
}

#[test]
fn field_csv_matches_mesh_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let report = small_reconstruction(dir.path());
    let mesh = TriMesh::build_uniform(16).unwrap();
    let text = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let rows: Vec<[f64; 3]> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert_eq!(rows.len(), mesh.num_nodes());
    for ((row, p), z) in rows.iter().zip(mesh.nodes()).zip(&report.adjoint.values) {
        assert_eq!([row[0], row[1]], *p);
        assert_eq!(row[2], *z);
    }
}

#[test]
fn bundled_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["paper_10_1.json", "paper_fig4.json", "paper_fig5_dg0.json", "paper_fig5_dg1.json"] {
        ExperimentConfig::from_file(&dir.join(name)).unwrap();
    }
}
