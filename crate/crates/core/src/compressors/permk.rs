//! Random block structure shared by the PermK family.
//!
//! A block-diagonal `n × d` mask with `τ` blocks of size `n/τ × d/τ` has its
//! rows and columns permuted uniformly at random. Client `i` keeps the
//! coordinates of its block, and the `n/τ` clients of one block form a
//! quantization group.

use crate::error::{invalid, Result};
use crate::numkit::RandomStream;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAssignment {
    tau: usize,
    client_block: Vec<u32>,
    client_slot: Vec<u32>,
    block_support: Vec<Vec<u32>>,
    coord_block: Vec<u32>,
}

impl BlockAssignment {
    /// One block holding every client and coordinate.
    pub fn single(n: usize, d: usize) -> Self {
        Self {
            tau: 1,
            client_block: vec![0; n],
            client_slot: (0..n as u32).collect(),
            block_support: vec![(0..d as u32).collect()],
            coord_block: vec![0; d],
        }
    }

    pub fn draw(n: usize, d: usize, tau: usize, rng: &mut RandomStream) -> Result<Self> {
        if tau == 0 || n % tau != 0 || d % tau != 0 {
            return Err(invalid(format!("tau = {tau} must divide n = {n} and d = {d}")));
        }
        let mut rows: Vec<u32> = (0..n as u32).collect();
        rng.shuffle(&mut rows);
        let mut cols: Vec<u32> = (0..d as u32).collect();
        rng.shuffle(&mut cols);
        let (group, width) = ((n / tau) as u32, (d / tau) as u32);
        let coord_block: Vec<u32> = cols.iter().map(|&c| c / width).collect();
        let mut block_support = vec![Vec::with_capacity(d / tau); tau];
        for (j, &b) in coord_block.iter().enumerate() {
            block_support[b as usize].push(j as u32);
        }
        Ok(Self {
            tau,
            client_block: rows.iter().map(|&r| r / group).collect(),
            client_slot: rows.iter().map(|&r| r % group).collect(),
            block_support,
            coord_block,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn block_of_client(&self, client: usize) -> usize {
        self.client_block[client] as usize
    }

    /// Position of the client inside its block's group, in `0..n/τ`.
    pub fn slot_of_client(&self, client: usize) -> usize {
        self.client_slot[client] as usize
    }

    pub fn block_of_coordinate(&self, coord: usize) -> usize {
        self.coord_block[coord] as usize
    }

    /// Ascending coordinates kept by the client.
    pub fn support(&self, client: usize) -> &[u32] {
        &self.block_support[self.block_of_client(client)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_partition_clients_and_coordinates() {
        let mut rng = RandomStream::new(4);
        let b = BlockAssignment::draw(12, 8, 4, &mut rng).unwrap();
        let mut seen = vec![0usize; 8];
        for block in 0..4 {
            let clients: Vec<usize> = (0..12).filter(|&i| b.block_of_client(i) == block).collect();
            assert_eq!(clients.len(), 3);
            let mut slots: Vec<usize> = clients.iter().map(|&i| b.slot_of_client(i)).collect();
            slots.sort();
            assert_eq!(slots, vec![0, 1, 2]);
            let support = b.support(clients[0]);
            assert_eq!(support.len(), 2);
            assert!(support.windows(2).all(|w| w[0] < w[1]));
            support.iter().for_each(|&j| seen[j as usize] += 1);
        }
        assert_eq!(seen, vec![1; 8]);
    }

    #[test]
    fn rejects_non_divisor() {
        let mut rng = RandomStream::new(4);
        assert!(BlockAssignment::draw(6, 8, 4, &mut rng).is_err());
    }
}
