mod common;

use common::{c, symmetric_eigenvalues};
use tridiag_resolvent::scan::{heatmap_pgm, read_scan_csv, scan_csv};
use tridiag_resolvent::{
    build_operator, classify_point, export_csv, scan, ClassifyParams, CoefficientSpec,
    HeatmapChannel, Label, Operator, ScanRegion,
};

fn cheb() -> Operator {
    build_operator(&CoefficientSpec::chebyshev()).unwrap()
}

fn default_region() -> ScanRegion {
    ScanRegion { re_min: -2.0, re_max: 2.0, im_min: -1.0, im_max: 1.0, nx: 81, ny: 41 }
}

fn distance_to_segment(re: f64, im: f64) -> f64 {
    let dx = (re.abs() - 1.0).max(0.0);
    dx.hypot(im)
}

#[test]
fn chebyshev_grid() {
    let m = cheb();
    let region = default_region();
    let p = ClassifyParams::default();
    let start = std::time::Instant::now();
    let r = scan(&m, &region, &p, 4).unwrap();
    println!("81x41 scan: {:?}", start.elapsed());
    for (idx, label) in r.labels.iter().enumerate() {
        let (re, im) = region.point(idx);
        if distance_to_segment(re, im) > 0.25 {
            assert_eq!(*label, Label::Resolvent, "({re}, {im})");
        }
        if im == 0.0 && re.abs() <= 0.9 {
            assert!(matches!(label, Label::Spectrum | Label::Indeterminate), "({re}, {im}) {label:?}");
        }
    }
    let again = scan(&m, &region, &p, 1).unwrap();
    assert_eq!(scan_csv(&r), scan_csv(&again));
}

#[test]
fn scan_agrees_with_classify_point() {
    let m = cheb();
    let region = ScanRegion { re_min: -1.5, re_max: 1.5, im_min: -0.5, im_max: 0.5, nx: 7, ny: 5 };
    let p = ClassifyParams::default();
    let r = scan(&m, &region, &p, 3).unwrap();
    for idx in 0..region.len() {
        let (re, im) = region.point(idx);
        assert_eq!(r.labels[idx], classify_point(&m, c(re, im), &p).label);
    }
}

#[test]
fn refinement_keeps_coincident_labels() {
    let m = cheb();
    let coarse = ScanRegion { re_min: -1.6, re_max: 1.6, im_min: -0.4, im_max: 0.4, nx: 9, ny: 5 };
    let fine = ScanRegion { nx: 17, ny: 9, ..coarse };
    let p = ClassifyParams::default();
    let rc = scan(&m, &coarse, &p, 2).unwrap();
    let rf = scan(&m, &fine, &p, 2).unwrap();
    for iy in 0..coarse.ny {
        for ix in 0..coarse.nx {
            assert_eq!(rc.labels[iy * coarse.nx + ix], rf.labels[2 * iy * fine.nx + 2 * ix]);
        }
    }
}

#[test]
fn period_two_spectrum_on_two_intervals() {
    let m: Operator = build_operator(&CoefficientSpec::period_two()).unwrap();
    // Symmetrized off-diagonals sqrt(a_n) alternate 1/2 and 1/4.
    let n = 400;
    let off: Vec<f64> = (1..n).map(|k| if k % 2 == 1 { 0.5 } else { 0.25 }).collect();
    let ev = symmetric_eigenvalues(&vec![0.0; n], &off);
    let near = |x: f64| ev.iter().any(|e| (e - x).abs() < 0.2);
    let region = ScanRegion { re_min: -1.2, re_max: 1.2, im_min: -0.3, im_max: 0.3, nx: 25, ny: 7 };
    let r = scan(&m, &region, &ClassifyParams::default(), 4).unwrap();
    let mut checked = 0;
    for (idx, label) in r.labels.iter().enumerate() {
        let (re, im) = region.point(idx);
        let far = ev.iter().all(|e| (re - e).hypot(im) >= 0.2);
        if far {
            assert_eq!(*label, Label::Resolvent, "({re}, {im})");
            checked += 1;
        } else if im == 0.0 && near(re) && ev.iter().any(|e| (e - re).abs() < 0.01) {
            assert!(matches!(label, Label::Spectrum | Label::Indeterminate), "({re}, {im}) {label:?}");
        }
    }
    assert!(checked > 50);
    assert!(ev.iter().all(|e| (e.abs() - 0.5).abs() <= 0.25 + 1e-9));
}

#[test]
fn csv_roundtrip_and_heatmap_header() {
    let m = cheb();
    let region = ScanRegion { re_min: -1.5, re_max: 1.5, im_min: -0.5, im_max: 0.5, nx: 5, ny: 3 };
    let r = scan(&m, &region, &ClassifyParams::default(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    export_csv(&r, &path).unwrap();
    let rows = read_scan_csv(&path).unwrap();
    assert_eq!(rows.len(), 15);
    for (idx, (re, im, label)) in rows.iter().enumerate() {
        assert_eq!((*re, *im), region.point(idx));
        assert_eq!(*label, r.labels[idx]);
    }
    for ch in [HeatmapChannel::Label, HeatmapChannel::Q, HeatmapChannel::Growth] {
        let pgm = heatmap_pgm(&r, ch);
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(lines.next(), Some("5 3"));
        assert_eq!(lines.next(), Some("255"));
        assert_eq!(lines.count(), 3);
    }
}

#[test]
fn missing_directory_surfaces_path() {
    let m = cheb();
    let region = ScanRegion { re_min: 3.0, re_max: 4.0, im_min: 3.0, im_max: 4.0, nx: 2, ny: 2 };
    let r = scan(&m, &region, &ClassifyParams::default(), 1).unwrap();
    let err = export_csv(&r, std::path::Path::new("/nonexistent/dir/scan.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir"), "{err}");
}
