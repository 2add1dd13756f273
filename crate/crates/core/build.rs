fn main() {
    // System OpenBLAS bundles the LAPACK routines we bind in src/linalg.rs.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
