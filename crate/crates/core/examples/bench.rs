use std::sync::Arc;

use ggp_core::engine::bench_random_playouts;
use ggp_core::{games, Backend, CompiledGame};

fn main() {
    let secs: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    for (name, text) in games::ALL {
        for b in [Backend::QueryDriven, Backend::TableDriven] {
            let g = Arc::new(CompiledGame::from_kif(text, b).unwrap());
            let r = bench_random_playouts(g, b, secs, 1);
            println!("{name}\t{}\t{:.1}\t{:.2}", b.name(), r.games_per_second, r.mean_length);
        }
    }
}
