//! Regenerates the committed benchmark fixture:
//! 20 problems x 100 fully labeled rows from the synthetic model.
//!
//! Usage: cargo run -p pas-core --example gen_fixture > tests/data/bench_fixture.csv

use pas_core::data::write_tables_csv;
use pas_core::synth::{Predictor, SynthConfig};

fn main() {
    let cfg = SynthConfig {
        m: 20,
        n: 20,
        big_n: 80,
        predictor: Predictor::Square,
        seed: 1405,
        ..Default::default()
    };
    let (tables, _) = pas_core::synth::synth_tables(&cfg);
    write_tables_csv(&tables, std::io::stdout()).expect("write fixture");
}
