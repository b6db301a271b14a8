fn main() {
    println!("wildrep: not yet wired up");
}
