fn main() { dimers::cli::run() }
