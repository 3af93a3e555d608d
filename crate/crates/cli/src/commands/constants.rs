//! `constants`: the scalar asymptotic constants for one tuning.

use asymptotics::compute_constants;

use crate::args::ConstantsArgs;
use crate::fmt::sig6;
use crate::{resolve_tuning, to_json, write_report, CliError};

pub fn run(args: &ConstantsArgs) -> Result<i32, CliError> {
    let resolved = resolve_tuning(&args.tuning, args.k, args.nu)?;
    let constants = compute_constants(
        &resolved.law,
        &resolved.rho0,
        &resolved.rho1,
        resolved.b0,
        1.0,
    )?;

    let law = match args.nu {
        Some(nu) => format!("student (nu = {})", sig6(nu)),
        None => "normal".to_string(),
    };
    println!("law: {law}, dimension k = {}", args.k);
    println!(
        "tuning: c0 = {}, c1 = {}, b0 = {}, breakdown r0 = {}",
        sig6(resolved.c0),
        sig6(resolved.c1),
        sig6(resolved.b0),
        sig6(resolved.r0)
    );
    println!("alpha1      = {:>12}  (regression score curvature)", sig6(constants.alpha1));
    println!("gamma1      = {:>12}  (shape score curvature)", sig6(constants.gamma1));
    println!("lambda      = {:>12}  (regression variance multiplier)", sig6(constants.lambda));
    println!("sigma1      = {:>12}  (shape variance multiplier)", sig6(constants.sigma1));
    println!("sigma2      = {:>12}  (size-direction variance coefficient)", sig6(constants.sigma2));
    println!("sigma3      = {:>12}  (auxiliary-scale variance multiplier)", sig6(constants.sigma3));
    println!("g1          = {:>12}  (regression gross-error sensitivity)", sig6(constants.g1));
    println!("g2          = {:>12}  (shape gross-error sensitivity)", sig6(constants.g2));
    println!("scale slope = {:>12}  (scale-equation mean derivative)", sig6(constants.scale_slope));

    if let Some(path) = &args.json {
        write_report(path, &to_json(&constants)?)?;
        println!("constants written to {}", path.display());
    }
    Ok(0)
}
