//! Reads a JSON game, or writes the built-in one when no path is given, and
//! prints what the solver sees.
//!
//! ```text
//! cargo run --example game_file -- [game.json]
//! ```

use lq_stackelberg::benchmarks;
use lq_stackelberg::riccati::{case_preconditions, CaseTag};
use lq_stackelberg::spec_file::{game_to_json, read_game};

fn main() -> lq_stackelberg::Result<()> {
    let game = match std::env::args().nth(1) {
        Some(path) => read_game(path.as_ref())?,
        None => {
            let game = benchmarks::reference_game();
            print!("{}", game_to_json(&game));
            game
        }
    };
    println!(
        "n = {}, m1 = {}, m2 = {}, horizon [{}, {}], time invariant: {}",
        game.dims.n,
        game.dims.m1,
        game.dims.m2,
        game.horizon.t0(),
        game.horizon.t_end(),
        game.is_time_invariant()
    );
    for tag in CaseTag::ALL {
        let missing = case_preconditions(&game, tag);
        if missing.is_empty() {
            println!("{tag}: applicable");
        } else {
            println!("{tag}: needs {}", missing.join(", "));
        }
    }
    Ok(())
}
