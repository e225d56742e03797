fn main() {
    println!("nullgeo {}", nullgeo::VERSION);
}
