use crate::model::{Coflow, CoflowInstance};

fn coflow(flows: &[(usize, usize, f64)], release: f64, weight: f64) -> Coflow {
    Coflow::new(flows.iter().copied(), release, weight).expect("fixture coflow is valid")
}

fn instance(n: usize, coflows: Vec<Coflow>) -> CoflowInstance {
    CoflowInstance::new(n, coflows).expect("fixture instance is valid")
}

/// 2x2 switch: one coflow on both diagonal pairs, then one coflow on each pair,
/// all unit sized. Varys totals 5, the optimum 4.
pub fn diagonal_unit() -> CoflowInstance {
    instance(
        2,
        vec![
            coflow(&[(0, 0, 1.0), (1, 1, 1.0)], 0.0, 1.0),
            coflow(&[(0, 0, 1.0)], 0.0, 1.0),
            coflow(&[(1, 1, 1.0)], 0.0, 1.0),
        ],
    )
}

/// Like [`diagonal_unit`] with sizes 2 and 3. Varys totals 12, the optimum 11.
pub fn diagonal_sized() -> CoflowInstance {
    instance(
        2,
        vec![
            coflow(&[(0, 0, 2.0), (1, 1, 2.0)], 0.0, 1.0),
            coflow(&[(0, 0, 3.0)], 0.0, 1.0),
            coflow(&[(1, 1, 3.0)], 0.0, 1.0),
        ],
    )
}

/// A unit flow released at 0 followed by three size-2 flows released at 1 on
/// the remaining pairs of a 2x2 switch. The optimum is 12.
pub fn staggered_release() -> CoflowInstance {
    instance(
        2,
        vec![
            coflow(&[(0, 0, 1.0)], 0.0, 1.0),
            coflow(&[(0, 1, 2.0)], 1.0, 1.0),
            coflow(&[(1, 0, 2.0)], 1.0, 1.0),
            coflow(&[(1, 1, 2.0)], 1.0, 1.0),
        ],
    )
}

/// 3x3 switch. Coflow 0 ("orange") covers the 2x2 block on ports 0 and 1;
/// coflow 1 ("green") sends from ports 0 and 1 to port 2. Orange's weight makes
/// every ordering put it first. W(orange) = 2 and W(orange, green) = 3, yet
/// finishing orange at 2 forces green to finish at 4.
pub fn counterexample_fixture() -> CoflowInstance {
    instance(
        3,
        vec![
            coflow(
                &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
                0.0,
                10.0,
            ),
            coflow(&[(0, 2, 1.0), (1, 2, 1.0)], 0.0, 1.0),
        ],
    )
}
