use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use qsim_core::evolve::{mesolve, sesolve, SolveOptions, SolveResult};
use qsim_core::factories::*;
use qsim_core::{tensor, QuantumObject, C64};

struct Counting;

static ALLOCS: AtomicUsize = AtomicUsize::new(0);
static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCS.fetch_add(1, Ordering::Relaxed);
        let live = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
        PEAK.fetch_max(live, Ordering::Relaxed);
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
        unsafe { System.dealloc(ptr, layout) }
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

/// `(allocation count, peak live bytes above the starting level)` of `f`.
fn measure(f: impl FnOnce() -> SolveResult) -> (usize, usize, SolveResult) {
    let base = LIVE.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let count0 = ALLOCS.load(Ordering::Relaxed);
    let r = f();
    let count = ALLOCS.load(Ordering::Relaxed) - count0;
    (count, PEAK.load(Ordering::Relaxed) - base, r)
}

fn output_bytes(r: &SolveResult) -> usize {
    r.expect.len() * std::mem::size_of::<C64>() + r.times.len() * std::mem::size_of::<f64>()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn cavity_qubit() -> (QuantumObject, QuantumObject, Vec<QuantumObject>, [QuantumObject; 2]) {
    let n = 12;
    let a = tensor(&destroy(n).unwrap(), &qeye(2).unwrap()).unwrap();
    let sm = tensor(&qeye(n).unwrap(), &sigmam()).unwrap();
    let h = &(&a.dag() * &a) + &(&(&a * &sm.dag()) + &(&a.dag() * &sm)) * 0.2;
    let psi0 = tensor(&coherent(n, C64::new(1.0, 0.0)).unwrap(), &basis(2, 0).unwrap()).unwrap();
    let c_ops = vec![&a * 0.1];
    let e = [&a.dag() * &a, sm.dag() * &sm];
    (h, psi0, c_ops, e)
}

// one test per binary keeps the counters free of concurrent noise
#[test]
fn solver_memory_does_not_grow_with_the_output_grid() {
    let (h, psi0, c_ops, e) = cavity_qubit();
    let rho0 = psi0.to_density().unwrap();
    let opts = SolveOptions::default();
    let tf = 20.0;
    let mut rows = Vec::new();
    for n_t in [100, 10_000] {
        let tl = linspace(0.0, tf, n_t);
        let se = measure(|| sesolve(&h, &psi0, &tl, &e, &[], &opts).unwrap());
        let me = measure(|| mesolve(&h, &rho0, &tl, &c_ops, &e, &[], &opts).unwrap());
        rows.push([(se.0, se.1 - output_bytes(&se.2)), (me.0, me.1 - output_bytes(&me.2))]);
    }
    for solver in 0..2 {
        let (small, large) = (rows[0][solver], rows[1][solver]);
        assert_eq!(small.0, large.0, "allocation count changed with tlist length: {small:?} vs {large:?}");
        assert!(large.1 <= small.1 + 1024, "working memory grew with tlist length: {small:?} vs {large:?}");
    }
}
