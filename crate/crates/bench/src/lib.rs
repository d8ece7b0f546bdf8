//! Shared inputs for the criterion benchmarks under `benches/`.

use storyline_core::dataset::build_dataset;
use storyline_core::synth::{generate, SynthBenchmark, SynthConfig};
use storyline_core::Query;

/// The synthetic benchmark at `storylines` x 40 articles, with its queries.
pub fn workload(storylines: usize) -> (SynthBenchmark, Vec<Query>) {
    let bench = generate(&SynthConfig { storylines, ..SynthConfig::default() });
    let queries = build_dataset(&bench.corpus).queries;
    (bench, queries)
}
