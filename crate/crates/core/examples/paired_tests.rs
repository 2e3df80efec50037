//! Decide a handful of hypothesis cells by hand: build discordant tables,
//! pick the exact or normal test, then control the false discovery rate.

use token_bias::paired_stats::{bh_procedure, select_test, ContingencyTable, TestDirection};

fn main() {
    // (label, n12, n21): original-right/perturbed-wrong and the reverse.
    let cells = [("baseline", 4, 160), ("os", 3, 6), ("fs_cot", 41, 38), ("zs_cot", 12, 30)];

    let results: Vec<_> = cells
        .iter()
        .map(|&(_, n12, n21)| select_test(&ContingencyTable::discordant(n12, n21), TestDirection::Less))
        .collect();
    let raw: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let decisions = bh_procedure(&raw, 0.05);

    println!("{:<10} {:>4} {:>4} {:>7} {:>10} {:>9} {:>9}  reject", "method", "n12", "n21", "test", "z", "p", "p_adj");
    for ((label, _, _), (r, d)) in cells.iter().zip(results.iter().zip(&decisions)) {
        println!(
            "{label:<10} {:>4} {:>4} {:>7?} {:>10.6} {:>9.6} {:>9.6}  {}",
            r.n12, r.n21, r.method, r.z_stat, r.p_value, d.adjusted_p, d.reject
        );
    }
}
