use trajseg::ingest::{ingest_geolife, Mode, PreprocessConfig};

const HEADER: &str = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

fn plt(start_min: u32, steps: u32, speed: impl Fn(u32) -> f64) -> String {
    let mut s = String::from(HEADER);
    let mut lat = 39.9;
    for i in 0..steps {
        let secs = start_min * 60 + 2 * i;
        lat += speed(i) * 2.0 / 111_195.0;
        s.push_str(&format!(
            "{lat:.7},116.3000000,0,150,39744.0,2008-10-23,{:02}:{:02}:{:02}\n",
            secs / 3600,
            secs / 60 % 60,
            secs % 60
        ));
    }
    s
}

#[test]
fn user_directory_becomes_trips() {
    let root = tempfile::tempdir().unwrap();
    let user = root.path().join("Data").join("010");
    std::fs::create_dir_all(user.join("Trajectory")).unwrap();
    // 100 walk points then 100 bike points, then a two-hour gap and a short run
    std::fs::write(
        user.join("Trajectory").join("a.plt"),
        plt(600, 200, |i| if i < 100 { 1.3 } else { 4.5 }),
    )
    .unwrap();
    std::fs::write(user.join("Trajectory").join("b.plt"), plt(780, 10, |_| 1.0)).unwrap();
    std::fs::write(
        user.join("labels.txt"),
        "Start Time\tEnd Time\tTransportation Mode\n\
         2008/10/23 10:00:00\t2008/10/23 10:03:20\twalk\n\
         2008/10/23 10:03:20\t2008/10/23 10:06:40\tbike\n\
         2008/10/23 13:00:00\t2008/10/23 13:00:20\trun\n",
    )
    .unwrap();
    // a user without labels contributes nothing
    std::fs::create_dir_all(root.path().join("Data").join("011").join("Trajectory")).unwrap();

    let (trips, s) = ingest_geolife(root.path(), &PreprocessConfig::default()).unwrap();
    assert_eq!(s.users, 2);
    assert_eq!(s.plt_files, 2);
    assert_eq!(s.raw_points, 210);
    assert_eq!(s.labeled_points, 200);
    assert_eq!(trips.len(), 1);
    let t = &trips[0];
    assert_eq!(t.len(), 200);
    assert_eq!(t.cp_indices, vec![100]);
    assert_eq!(t.cp_coords, vec![0.5]);
    assert_eq!(t.labels[99], Mode::Walk);
    assert_eq!(t.labels[100], Mode::Bike);
    assert!(t.validate(20, 400).is_ok());
    assert!((t.features[50][0] - 1.3).abs() < 0.05);
}
