//! Writes a small synthetic region in the raw input formats.
//!
//! cargo run --release --example simulate_world -- /tmp/world

use socialpop::simulate::{simulate_world, Layout, UnitSimConfig, WorldConfig};

fn main() -> socialpop::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "world".into());
    let cfg = WorldConfig {
        units: UnitSimConfig {
            n_units: 24,
            layout: Layout::Grid { cols: 4, rows: 6 },
            ..Default::default()
        },
        ..Default::default()
    };
    let world = simulate_world(&cfg)?;
    let files = world.write(std::path::Path::new(&dir))?;
    let censored = world.observations.iter().filter(|o| o.count.is_censored()).count();
    println!(
        "{} units, {} tiles, {} observations ({censored} censored)",
        world.shapes.len(),
        world.tiles.len(),
        world.observations.len()
    );
    println!("truth: {}", files.truth.display());
    Ok(())
}
