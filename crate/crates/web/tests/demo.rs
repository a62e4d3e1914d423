// Native runs of the success paths; error paths need a JS host.
use radloc_web::Demo;

#[test]
fn demo_operations() {
    let demo = Demo::new(0).unwrap();
    assert_eq!(demo.frames(), 600);
    let track = demo.track().unwrap();
    assert_eq!(track.len(), 1800);

    let map = demo.range_azimuth(10).unwrap();
    assert_eq!(map.len(), (demo.map_rows() * demo.map_cols()) as usize);
    assert_eq!(map.iter().copied().fold(0.0f32, f32::max), 1.0);

    let p = demo.locate(10, "fft3d").unwrap();
    assert_eq!(p.len(), 3);
    let gt = &track[30..33];
    let err = ((p[0] - gt[0]).powi(2) + (p[1] - gt[1]).powi(2) + (p[2] - gt[2]).powi(2)).sqrt();
    assert!(err < 0.5, "fft3d error {err} m");
    assert!((demo.row_range(0) - 0.0488).abs() < 1e-3);
}
