//! Render the three camera views at a few points of each built-in track.
//!
//! ```text
//! cargo run --release --example render_preview -- out_dir
//! ```

use std::path::PathBuf;

use steerclone::simworld::{VehicleState, World};
use steerclone::Behavior;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "preview".into()));
    std::fs::create_dir_all(&out)?;
    for id in Behavior::ALL {
        let w = World::builtin(id)?;
        let line = w.centerline();
        for k in 0..4 {
            let s = k as f64 * line.length() / 4.0 + 30.0;
            let p = line.point_at(s);
            let st = VehicleState { x: p[0], y: p[1], yaw: line.heading_at(s), v: 0.0 };
            for &slot in w.rig().slots() {
                let name = format!("{}_{k}_{slot:?}.png", id.name()).to_lowercase();
                w.render(&st, slot).save_png(&out.join(name))?;
            }
        }
    }
    Ok(())
}
