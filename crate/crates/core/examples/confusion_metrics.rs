//! Point-wise metrics from a fixed confusion matrix (rows are true modes).
//!
//! `cargo run --example confusion_metrics`

use trajseg::eval::{pointwise_metrics, render_table, ConfusionMatrix};

fn main() -> trajseg::Result<()> {
    let cm = ConfusionMatrix::from_counts(vec![
        vec![232133, 6590, 13245, 3637, 1430],
        vec![15480, 135651, 5445, 553, 349],
        vec![29758, 3557, 182237, 21094, 3646],
        vec![8911, 1001, 14163, 109522, 3913],
        vec![1302, 191, 748, 1918, 136075],
    ])?;
    let m = pointwise_metrics(&cm)?;
    print!("{}", render_table(&cm, &m));
    println!("{}", serde_json::to_string_pretty(&m).expect("metrics serialise"));
    Ok(())
}
