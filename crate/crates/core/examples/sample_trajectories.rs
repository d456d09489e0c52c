//! Draws demonstration walks with each sampler and prints a few.

use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::rng::rng_from;
use wikinav::trajectories::{Sampler, SamplerKind};

fn main() -> wikinav::Result<()> {
    let g = synth_graph(&SynthSpec::default())?;
    let mut rng = rng_from(1, &[]);
    for kind in [
        SamplerKind::Forward,
        SamplerKind::Reverse,
        SamplerKind::ShortestPath,
    ] {
        let mut sampler = Sampler::new(kind, 5, false)?;
        println!("{kind:?}");
        for _ in 0..3 {
            let t = sampler.sample(&g, &mut rng)?;
            assert!(t.is_walk_of(&g));
            let labels: Vec<String> = t.nodes.iter().map(|&n| g.label(n)).collect();
            println!("  {}", labels.join(" -> "));
        }
        let mut multi = Sampler::new(kind, 20, true)?;
        let lens: Vec<usize> = (0..20)
            .map(|_| multi.sample(&g, &mut rng).map(|t| t.steps()))
            .collect::<Result<_, _>>()?;
        println!("  multistep lengths {lens:?}");
        println!("  {:?}", multi.stats);
    }
    Ok(())
}
