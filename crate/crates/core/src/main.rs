use clap::Parser;

use cavity_kernels::cli::{run, Args};

fn main() {
    std::process::exit(run(&Args::parse()));
}
