use crate::graph::{AddressKey, Transaction};

/// Flattens a multi-input, multi-output payment into pairwise transfers.
///
/// Every distinct input address pays every output: the output value is split
/// evenly across input addresses, with the remainder going one unit at a
/// time to the earliest inputs so the pieces sum to the output value. With
/// no inputs (a coinbase) each output becomes a senderless transfer.
pub fn expand_payment(
    inputs: &[AddressKey],
    outputs: &[(AddressKey, u128)],
    block_height: u64,
    timestamp: u64,
) -> Vec<Transaction> {
    let mut senders: Vec<&AddressKey> = Vec::with_capacity(inputs.len());
    for input in inputs {
        if !senders.contains(&input) {
            senders.push(input);
        }
    }
    let mut out = Vec::with_capacity(outputs.len() * senders.len().max(1));
    for (recipient, value) in outputs {
        if senders.is_empty() {
            out.push(Transaction {
                sender: None,
                recipient: recipient.clone(),
                amount: *value,
                block_height,
                timestamp,
            });
            continue;
        }
        let k = senders.len() as u128;
        let (share, remainder) = (value / k, value % k);
        for (i, sender) in senders.iter().enumerate() {
            out.push(Transaction {
                sender: Some((*sender).clone()),
                recipient: recipient.clone(),
                amount: share + u128::from((i as u128) < remainder),
                block_height,
                timestamp,
            });
        }
    }
    out
}
