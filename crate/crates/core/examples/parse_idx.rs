//! Building a tiny IDX image/label pair in memory and reading it back.

use sgd_termination::data::{idx_points, load_idx, make_binary_task, DataOrigin};

fn idx(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend(payload);
    out
}

fn main() -> sgd_termination::Result<()> {
    let pixels: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
    let images = load_idx(&idx(0x0803, &[4, 3, 3], &pixels))?;
    let labels = load_idx(&idx(0x0801, &[4], &[1, 8, 8, 3]))?;
    println!("images shape {:?}, labels shape {:?}", images.shape, labels.shape);

    let points = idx_points(&images, &labels, true)?;
    let task = make_binary_task(&points, 1, 8, DataOrigin::Mnist)?;
    println!("1-vs-8 task: {} points in dimension {}", task.len(), task.dim());

    match load_idx(&[0, 0, 8, 3, 0]) {
        Err(e) => println!("truncated header: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
