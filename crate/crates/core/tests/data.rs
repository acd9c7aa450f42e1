mod common;

use common::*;
use pgfwi_core::data::{
    area_downsample, check_range, prepare_model, synthesize_observed, toy_two_layer, BenchmarkSpec, RawDescriptor,
    RawDtype, RawGrid, RawOrder,
};
use pgfwi_core::wavesim::{forward_model, io, AcquisitionGeometry, VelocityModel};
use pgfwi_core::Error;

#[test]
fn presets_match_published_grids() {
    let m = BenchmarkSpec::marmousi();
    assert_eq!((m.nx, m.nz, m.dx_km, m.v_range), (191, 51, 0.03, (1472.0, 5772.0)));
    let o = BenchmarkSpec::overthrust();
    assert_eq!((o.nx, o.nz, o.dx_km, o.v_range), (251, 81, 0.05, (2360.0, 6000.0)));
    assert!(BenchmarkSpec::preset("nope").is_err());
    let toy = BenchmarkSpec::toy_two_layer().load().unwrap();
    assert_eq!((toy.nx, toy.nz, toy.vmin(), toy.vmax()), (32, 16, 2000.0, 2500.0));
    assert!(BenchmarkSpec::marmousi().load().is_err());
}

#[test]
fn block_means_by_hand() {
    let raw = [
        1.0, 2.0, 3.0, 4.0, //
        5.0, 6.0, 7.0, 8.0, //
        9.0, 10.0, 11.0, 12.0, //
        13.0, 14.0, 15.0, 16.0,
    ];
    // (1+2+5+6)/4, (3+4+7+8)/4, (9+10+13+14)/4, (11+12+15+16)/4
    assert_eq!(area_downsample(&raw, 4, 4, 2, 2).unwrap(), vec![3.5, 5.5, 11.5, 13.5]);
    // 3 -> 2 along x: cell 0 covers [0, 1.5), cell 1 covers [1.5, 3)
    let row = [1.0, 2.0, 4.0];
    let got = area_downsample(&row, 3, 1, 2, 1).unwrap();
    assert!((got[0] - (1.0 + 0.5 * 2.0) / 1.5).abs() < 1e-15);
    assert!((got[1] - (0.5 * 2.0 + 4.0) / 1.5).abs() < 1e-15);
    assert!(area_downsample(&raw, 4, 4, 5, 2).is_err());
}

fn write_raw_f32_zfast(dir: &std::path::Path, model: &VelocityModel) -> std::path::PathBuf {
    let path = dir.join("raw.bin");
    let mut bytes = Vec::new();
    for ix in 0..model.nx {
        for iz in 0..model.nz {
            bytes.extend_from_slice(&(model.at(ix, iz) as f32).to_le_bytes());
        }
    }
    std::fs::write(&path, bytes).unwrap();
    let desc = RawDescriptor { nx: model.nx, nz: model.nz, dtype: RawDtype::F32, order: RawOrder::ZFastest };
    io::write_json(&io::sidecar_path(&path), &desc).unwrap();
    path
}

#[test]
fn prepare_reads_raw_and_checks_range() {
    let dir = tempfile::tempdir().unwrap();
    let fine = toy_two_layer(64, 32, 0.005, (2000.0, 2500.0)).unwrap();
    let path = write_raw_f32_zfast(dir.path(), &fine);
    let raw = RawGrid::read(&path).unwrap();
    assert_eq!(raw.values, fine.v);

    let spec = BenchmarkSpec { source_path: Some(path.clone()), ..BenchmarkSpec::toy_two_layer() };
    let coarse = spec.load().unwrap();
    assert_eq!(coarse, toy_two_layer(32, 16, 0.01, (2000.0, 2500.0)).unwrap());

    // already on the target grid: copied through
    let same = RawGrid { nx: 32, nz: 16, values: coarse.v.clone() };
    assert_eq!(prepare_model(&BenchmarkSpec::toy_two_layer(), &same).unwrap(), coarse);

    let wrong = BenchmarkSpec { v_range: (1500.0, 2500.0), ..BenchmarkSpec::toy_two_layer() };
    assert!(matches!(prepare_model(&wrong, &same), Err(Error::RangeDrift { .. })));
    assert!(check_range(&coarse, (2010.0, 2510.0)).is_ok());
}

#[test]
fn observed_data_is_plain_forward_modeling() {
    let model = VelocityModel::constant(16, 12, 0.01, 2000.0).unwrap();
    let geom = AcquisitionGeometry::surface(16, 1, 1, 0, 1e-3, 150, 25.0);
    let d = synthesize_observed(&model, &geom).unwrap();
    assert_eq!(d.traces, forward_model(&model, &geom, 0).unwrap());

    let mut silent = geom.clone();
    silent.wavelet = vec![0.0; 150];
    assert!(synthesize_observed(&model, &silent).unwrap().traces.iter().all(|&v| v == 0.0));

    let het = smooth_random_model(20, 14, 0.01, 2200.0, 300.0, 5);
    let ab = synthesize_observed(&het, &point_geometry((3, 2), vec![(15, 9)], 25.0, 1e-3, 250)).unwrap();
    let ba = synthesize_observed(&het, &point_geometry((15, 9), vec![(3, 2)], 25.0, 1e-3, 250)).unwrap();
    assert!(rel_l2(&ab.traces, &ba.traces) < 1e-8);
}
