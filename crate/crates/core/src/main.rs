use std::process;

fn main() {
    process::exit(ppattach::cli::run(std::env::args_os()));
}
