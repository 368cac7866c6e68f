//! Assembles the transfer matrix of the pinched doubling map, writes it to a
//! binary dump and reads it back.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use selfconsistent::dynamics::CircleMap;
use selfconsistent::fourier::grid_size;
use selfconsistent::operator::{assemble_transfer, read_operator, write_operator};

fn main() -> selfconsistent::Result<()> {
    let n = 32;
    let map = CircleMap::pinched_doubling(0.9)?;
    let op = assemble_transfer(&map.sample(grid_size(n)), n, "T")?;
    let path = std::env::temp_dir().join("sctool_operator.bin");
    write_operator(&op, BufWriter::new(File::create(&path)?))?;
    let back = read_operator(BufReader::new(File::open(&path)?))?;
    println!("wrote {} ({}x{} entries)", path.display(), 2 * n, 2 * n);
    println!("max entry difference after reload: {:e}", op.entries().max_abs_diff(back.entries()));
    println!("L̂(0,0) = {}, L̂(1,1) = {:.6}", op.entry(0, 0), op.entry(1, 1));
    Ok(())
}
