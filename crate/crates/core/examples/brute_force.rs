//! Classical references: exhaustive grid minima and zooming refinement of the
//! 3-, 4- and 5-atom LJ energies.

use grovermin::baseline::{grid_brute_min, refine_min, RefineConfig};
use grovermin::encoding::RegisterLayout;
use grovermin::objectives::{
    build_fixed_core, total_energy, trigonal_bipyramid, FnObjective, FreeAtomEnergy,
    FreeAtomTemplate, GoldsteinPrice, LjTrimer,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RegisterLayout::uniform(&["x1", "x2"], 5, -3.2, 3.0)?;
    let gp = grid_brute_min(&GoldsteinPrice, &layout)?;
    println!(
        "GP grid: {} at {:?} ({} evaluations)",
        gp.value, gp.point, gp.num_evaluations
    );

    let config = RefineConfig::default();
    let trimer = refine_min(
        &LjTrimer { shared_bond: true },
        &[(0.5, 1.5), (0.5, 2.5)],
        &config,
    )?;
    println!(
        "trimer:   {:.6} at bond {:.5}",
        trimer.value, trimer.point[0]
    );

    let tetramer = FreeAtomEnergy {
        geometry: build_fixed_core(3, 1.0)?,
        template: FreeAtomTemplate::all_free(),
    };
    let t = refine_min(
        &tetramer,
        &[(-0.5, 0.5), (0.01, 1.01), (0.01, 1.01)],
        &config,
    )?;
    println!(
        "tetramer: {:.6} with the free atom at {:?}",
        t.value, t.point
    );

    let pentamer = FnObjective::new("tbp", 2, |x: &[f64]| {
        total_energy(&trigonal_bipyramid(x[0], x[1]))
    });
    let p = refine_min(&pentamer, &[(0.8, 1.2), (0.6, 1.0)], &config)?;
    println!(
        "pentamer: {:.6} (side {:.5}, apex height {:.5})",
        p.value, p.point[0], p.point[1]
    );

    assert!((p.value + 9.103852).abs() < 1e-3);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
