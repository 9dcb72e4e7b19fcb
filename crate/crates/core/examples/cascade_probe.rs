use cascade_core::toy::cascade::*;
use cascade_core::toy::dynamics::ToyParams;
use cascade_core::ode::C64;

fn main() {
    // normalized stage-rate constants: K_j = dur_j / ln(threshold/entry_j)
    for delta in [1e-2f64, 1e-3, 1e-4] {
        let params = ToyParams::leading(7, 2);
        let cfg = CascadeConfig { delta, ..Default::default() };
        let res = run_cascade(&params, &cfg).unwrap();
        let mut tau_of = std::collections::BTreeMap::new();
        for &(g, t) in &res.taus { tau_of.entry(g).or_insert(t); }
        let mut ks = vec![];
        let mut buf = vec![C64::default(); 7];
        for g in 3..=4usize {
            let (t0, t1) = (tau_of[&g], tau_of[&(g+1)]);
            res.trajectory.eval(t0, &mut buf).unwrap();
            let entry = buf[g].norm(); // 0-based index g = generation g+1
            let k = (t1 - t0) / (0.5f64/entry).ln();
            ks.push(k);
            println!("delta={delta:.0e} stage {g}->{}: dur={:.3} entry={entry:.3e} K={k:.4}", g+1, t1-t0);
        }
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        let var = ks.iter().map(|k| (k-mean)*(k-mean)).sum::<f64>() / ks.len() as f64;
        println!("  CoV = {:.1}%  (1/lambda = {:.4})", 100.0*var.sqrt()/mean, 1.0/3f64.sqrt());
        // also: mean stage duration for the across-delta fit
        let durs = stage_durations(&res, 7);
        println!("  mean_dur = {:.4}", durs.iter().sum::<f64>() / durs.len() as f64);
    }
    // across-delta fit of mean duration
    let mut xs = vec![]; let mut ys = vec![];
    for delta in [1e-2f64, 1e-3, 1e-4] {
        let params = ToyParams::leading(7, 2);
        let cfg = CascadeConfig { delta, ..Default::default() };
        let res = run_cascade(&params, &cfg).unwrap();
        let durs = stage_durations(&res, 7);
        xs.push((1.0/delta).ln());
        ys.push(durs.iter().sum::<f64>() / durs.len() as f64);
    }
    let (k, c, r2) = linear_fit(&xs, &ys);
    println!("fit: K={k:.4} c={c:.4} R2={r2:.6}");
}
