//! Ingest a GeoLife directory (or a single user folder) into a dataset file.
//!
//! `cargo run --release --example parse_geolife -- <geolife_dir> [out.jsonl]`
//!
//! Without arguments a two-file user folder is written to a temp directory
//! and parsed instead.

use std::path::PathBuf;

use trajseg::ingest::{ingest_geolife, save_dataset, PreprocessConfig};

const HEADER: &str = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

fn demo_user(root: &std::path::Path) -> std::io::Result<PathBuf> {
    let user = root.join("Data").join("000");
    std::fs::create_dir_all(user.join("Trajectory"))?;
    let mut plt = String::from(HEADER);
    let mut lat = 39.9;
    for i in 0..120 {
        let secs = 2 * i;
        lat += if i < 60 { 1.2 } else { 9.0 } * 2.0 / 111_000.0;
        plt.push_str(&format!(
            "{lat:.6},116.400000,0,150,39000.0,2008-10-23,10:{:02}:{:02}\n",
            secs / 60,
            secs % 60
        ));
    }
    std::fs::write(user.join("Trajectory").join("20081023100000.plt"), plt)?;
    std::fs::write(
        user.join("labels.txt"),
        "Start Time\tEnd Time\tTransportation Mode\n\
         2008/10/23 10:00:00\t2008/10/23 10:01:59\twalk\n\
         2008/10/23 10:02:00\t2008/10/23 10:04:00\tbus\n",
    )?;
    Ok(root.to_path_buf())
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let dir = match args.first() {
        Some(d) => PathBuf::from(d),
        None => demo_user(tmp.path())?,
    };
    let (trips, s) = ingest_geolife(&dir, &PreprocessConfig::default())?;
    println!(
        "users {}  plt files {}  raw points {}  labeled {}  trips {}",
        s.users, s.plt_files, s.raw_points, s.labeled_points, s.trips
    );
    for t in trips.iter().take(5) {
        let modes: Vec<&str> = t.targets().segments.iter().map(|s| s.mode.name()).collect();
        println!("{} points, change points {:?}, modes {:?}", t.len(), t.cp_indices, modes);
    }
    if let Some(out) = args.get(1) {
        save_dataset(&trips, out.as_ref())?;
        println!("wrote {out}");
    }
    Ok(())
}
