// temporary diagnostic
use si_euler_core::flow::{FourierMode, InitialData, Solver, SolverOptions};
use si_euler_core::SymmetryFold;

fn main() {
    let fold = SymmetryFold::new(4).unwrap();
    let data = InitialData::fourier(fold, vec![FourierMode { j: 1, cos: 0.0, sin: 1.0 }]);
    let opts = SolverOptions { full_refresh: true, ..Default::default() };
    let s = Solver::new(&data, fold, 1024, 1024, opts).unwrap();
    let mut st = s.initial_state().unwrap();
    let t0 = std::time::Instant::now();
    for _ in 0..100 {
        st = s.step(&st, 1e-3).unwrap();
    }
    println!("100 steps at M=N=1024: {:.2?} ({:.2} ms/step)", t0.elapsed(), t0.elapsed().as_secs_f64()*10.0);
}
