//! Reproduces both partition tables: equal conditional variance for the
//! Gaussian law, and equal K' for Student-t generators.
//!
//! cargo run --release --example partition_tables

use std::time::Instant;

use condcov::partition::{table1, table2};

fn main() -> condcov::error::Result<()> {
    let start = Instant::now();
    let t1 = table1(6)?;
    println!("Equal conditional variance (Gaussian), {:.2?}", start.elapsed());
    print!("{}", t1.to_text());

    let start = Instant::now();
    let t2 = table2()?;
    println!("\nEqual K' (Student-t, v = inf is Gaussian), {:.2?}", start.elapsed());
    print!("{}", t2.to_text());

    println!("\nFull precision:");
    for row in t1.rows.iter().chain(&t2.rows) {
        let nu = row.nu.map_or(String::new(), |nu| format!(" v={nu}"));
        println!("k={}{nu}: {:?}", row.k, row.levels);
    }
    Ok(())
}
