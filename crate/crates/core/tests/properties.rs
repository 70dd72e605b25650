use hmec::env::random_world;
use hmec::net::Sample;
use hmec::optim::repair;
use hmec::problem::{feasible, objective, optimal_split, Assignment, Instance};
use hmec::rng_for;
use hmec::sched::{ReplayBuffer, SampleMemory};
use proptest::prelude::*;

fn sample(tag: usize) -> Sample {
    Sample { input: vec![tag as f64], target_assoc: tag % 3, target_fraction: 0.5 }
}

proptest! {
    #[test]
    fn memory_is_bounded_fifo(cap in 1usize..40, pushes in 0usize..120) {
        let mut mem = SampleMemory::new(cap);
        for k in 0..pushes {
            let evicted = mem.push(sample(k));
            if k >= cap {
                let (seq, old) = evicted.expect("full memory evicts");
                prop_assert_eq!(seq, (k - cap) as u64);
                prop_assert_eq!(old.input[0], (k - cap) as f64);
            } else {
                prop_assert!(evicted.is_none());
            }
            prop_assert!(mem.len() <= cap);
        }
        let seqs: Vec<u64> = mem.seqs().collect();
        let expected: Vec<u64> = (pushes.saturating_sub(cap) as u64..pushes as u64).collect();
        prop_assert_eq!(seqs, expected);
    }

    #[test]
    fn replay_buffer_is_bounded_fifo(cap in 1usize..40, priorities in prop::collection::vec(1e-6f64..10.0, 0..120)) {
        let mut buf = ReplayBuffer::new(cap, 0.6);
        for (k, &p) in priorities.iter().enumerate() {
            let evicted = buf.push(sample(k), p).unwrap();
            prop_assert_eq!(evicted.map(|t| t.seq), (k >= cap).then(|| (k - cap) as u64));
            prop_assert!(buf.len() <= cap);
        }
        let seqs: Vec<u64> = buf.entries().map(|t| t.seq).collect();
        let expected: Vec<u64> = (priorities.len().saturating_sub(cap) as u64..priorities.len() as u64).collect();
        prop_assert_eq!(seqs, expected);
        prop_assert!(buf.entries().all(|t| t.priority > 0.0));
    }

    #[test]
    fn split_uses_full_capacity(cycles in prop::collection::vec(1e8f64..5e9, 1..8), cap in 1e9f64..1e11) {
        let f = optimal_split(&cycles, cap);
        let total: f64 = f.iter().sum();
        prop_assert!((total - cap).abs() <= 1e-12 * cap);
        prop_assert!(f.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn repair_always_yields_feasible(seed in 0u64..500, n in 1usize..12, m in 1usize..5, codes in prop::collection::vec(0usize..8, 12)) {
        let world = random_world(seed, n, m);
        let inst = Instance::new(&world);
        let draft = Assignment { assoc: codes[..n].to_vec(), alloc: vec![0.0; n] };
        let fixed = repair(&inst, &draft);
        prop_assert!(feasible(&world, &fixed).is_feasible());
        let value = objective(&world, &fixed).unwrap();
        prop_assert!((value - inst.evaluate(&fixed.assoc)).abs() <= 1e-9 * value);
    }
}

#[test]
fn paper_sized_buffer_evicts_oldest() {
    let mut buf = ReplayBuffer::new(10_000, 0.6);
    for k in 0..10_000 {
        assert!(buf.push(sample(k), 1.0).unwrap().is_none());
    }
    let evicted = buf.push(sample(10_000), 1.0).unwrap().unwrap();
    assert_eq!(evicted.seq, 0);
    assert_eq!(buf.len(), 10_000);
    assert_eq!(buf.get(0).seq, 1);
    let batch = buf.sample_indices(1000, &mut rng_for(4, 0));
    assert_eq!(batch.len(), 1000);
    assert!(batch.iter().all(|&k| k < 10_000));
}

#[test]
fn memory_of_1000_evicts_the_50_oldest() {
    let mut mem = SampleMemory::new(1000);
    for k in 0..1050 {
        mem.push(sample(k));
    }
    assert_eq!(mem.len(), 1000);
    assert_eq!(mem.seqs().next(), Some(50));
    assert_eq!(mem.get(0).input[0], 50.0);
}

#[test]
fn prioritized_draw_frequencies_within_three_sigma() {
    let priorities = [0.05, 0.3, 1.0, 2.5, 0.8, 7.0, 1e-6, 4.0];
    let alpha = 0.6;
    let mut buf = ReplayBuffer::new(16, alpha);
    for (k, &p) in priorities.iter().enumerate() {
        buf.push(sample(k), p).unwrap();
    }
    let draws = 100_000;
    let mut counts = vec![0usize; priorities.len()];
    for k in buf.sample_indices(draws, &mut rng_for(8, 3)) {
        counts[k] += 1;
    }
    let total: f64 = priorities.iter().map(|p: &f64| p.powf(alpha)).sum();
    for (k, &p) in priorities.iter().enumerate() {
        let prob = p.powf(alpha) / total;
        assert!((buf.probability(k) - prob).abs() < 1e-12);
        let expected = prob * draws as f64;
        let sigma = (draws as f64 * prob * (1.0 - prob)).sqrt();
        let dev = (counts[k] as f64 - expected).abs();
        assert!(dev <= 3.0 * sigma.max(1.0), "entry {k}: {} draws, expected {expected:.1} ± {sigma:.1}", counts[k]);
    }
}
