//! Draw the Gaussian increments of one midpoint step two ways: directly, and by
//! querying a stored Brownian path that is refined on demand.

use midpoint_langevin::brownian::{step_increments, BrownianPath, StepIncrements};
use midpoint_langevin::rng::stream;

fn main() -> midpoint_langevin::Result<()> {
    let (h, alpha, dim) = (0.1, 0.3, 3);
    let mut rng = stream(11, 0);

    let direct = step_increments(h, alpha, dim, &mut rng)?;
    println!("direct draw: W1 {:?}", direct.w1);

    // Four base cells of length h/4; the query splits one of them at αh.
    let mut path = BrownianPath::sample(h / 4.0, 4, dim, &mut rng)?;
    let cells = path.increments(0, &[alpha * h, h], &mut rng)?;
    let from_path = StepIncrements::from_cells(h, alpha, &cells[0], &cells[1]);
    println!("from path:   W1 {:?}", from_path.w1);
    println!("pieces stored after refinement: {}", path.n_pieces());

    // A coarser query over the same span sees the same path.
    let whole = path.increments(0, &[h], &mut rng)?;
    let coarse = StepIncrements::from_whole_step(h, &whole[0]);
    println!("W2 agrees: {:?} vs {:?}", from_path.w2, coarse.w2);
    Ok(())
}
