//! Write the bundled five-document toy corpus to a directory, ready for
//! `satrag ingest`.
//!
//! Usage: cargo run -p satrag --example make_toy_corpus -- <out-dir>

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "toy-docs".to_string());
    let dir = std::path::Path::new(&out);
    std::fs::create_dir_all(dir).expect("create output directory");
    for (name, body) in satrag::synth::toy_documents() {
        std::fs::write(dir.join(&name), body).expect("write document");
        println!("{}", dir.join(&name).display());
    }
}
