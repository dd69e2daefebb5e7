use std::sync::Arc;
use std::time::Instant;

use ggp_core::{games, Backend, CompiledGame};
use ggp_player::{run_uct, Budget, SearchConfig};

fn main() {
    for (name, text) in [("tictactoe", games::TICTACTOE), ("connectfour", games::CONNECTFOUR)] {
        let g = Arc::new(CompiledGame::from_kif(text, Backend::QueryDriven).unwrap());
        let s = g.initial_state();
        let t = Instant::now();
        let st = run_uct(g.clone(), &s, SearchConfig { budget: Budget::Playouts(10_000), ..Default::default() });
        println!("{name}\t{}\t{:.3}s", st.playouts, t.elapsed().as_secs_f64());
    }
}
