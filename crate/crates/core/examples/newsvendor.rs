// The multi-product newsvendor: loss, CVaR, and the sample-average order.

use nalgebra::DVector;

use mgdro::datagen::{sample_mixture, MixtureSpec};
use mgdro::newsvendor::{
    empirical_cvar, loss_value, newsvendor_objective, out_of_sample_cvar, solve_sp, PriceVector,
};

pub fn run_example() -> mgdro::Result<(f64, f64)> {
    let prices = PriceVector::benchmark(3);
    let order = DVector::from_row_slice(&[10.0, 10.0, 10.0]);
    let demand = DVector::from_row_slice(&[6.0, 12.0, 10.0]);
    println!(
        "loss of ordering 10 each at demand {:?}: {}",
        demand.as_slice(),
        loss_value(&prices, &order, &demand)?
    );
    let obj = newsvendor_objective(&prices, 3, 0.05)?;
    println!("CVaR objective has {} affine pieces", obj.num_pieces());
    println!(
        "CVaR_0.05 of losses 0..99: {}",
        empirical_cvar(&(0..100).map(f64::from).collect::<Vec<_>>(), 0.05)?
    );

    let mix = MixtureSpec::bimodal();
    let train = sample_mixture(&mix, 100, 1)?;
    let test = sample_mixture(&mix, 20_000, 2)?;
    let sp = solve_sp(&train, &prices, 0.05)?;
    let oos = out_of_sample_cvar(&prices, &sp.order, &test, 0.05)?;
    println!(
        "SP order {:.3?}, in-sample CVaR {:.3}, out-of-sample {:.3}",
        sp.order.as_slice(),
        sp.objective,
        oos
    );
    Ok((sp.objective, oos))
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
