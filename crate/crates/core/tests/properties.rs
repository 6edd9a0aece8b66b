use proptest::prelude::*;

use semvr::codec::{select_dbf_indices, PayloadType};
use semvr::protocol::{decapsulate, encapsulate, PacketMeta, Scheme, HEADER_LEN};
use semvr::slg::{relation, Relation, Slg, SlgNode};
use semvr::{Point, Rational};

fn point() -> impl Strategy<Value = Point> {
    (-500i64..500, 1i64..50, -500i64..500, 1i64..50)
        .prop_map(|(a, b, c, d)| Point::new(Rational::new(a, b), Rational::new(c, d)))
}

fn payload_type() -> impl Strategy<Value = PayloadType> {
    (0u8..4).prop_map(|c| PayloadType::from_code(c).unwrap())
}

proptest! {
    #[test]
    fn relations_are_antisymmetric(u in point(), v in point()) {
        let ab = relation(u, v).unwrap();
        let ba = relation(v, u).unwrap();
        prop_assert_eq!(ab.opposite(), ba);
        prop_assert_eq!(ab == Relation::CoLocated, u == v);
    }

    #[test]
    fn graph_ignores_node_order(points in prop::collection::vec(point(), 1..7), rot in 0usize..7) {
        let nodes: Vec<SlgNode> = points
            .iter()
            .enumerate()
            .map(|(i, &centroid)| SlgNode {
                object_id: i as u16 + 1,
                centroid,
                class_label: "obj".into(),
                semantic_label: format!("object {i}"),
            })
            .collect();
        let mut shuffled = nodes.clone();
        shuffled.rotate_left(rot % nodes.len());
        shuffled.reverse();
        let a = Slg::from_nodes(4, nodes.clone());
        let b = Slg::from_nodes(4, shuffled);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.edges.len(), nodes.len() * (nodes.len() - 1));
    }

    #[test]
    fn packets_round_trip(
        scheme in 0u8..3,
        tile_id in any::<u16>(),
        frame_idx in any::<u16>(),
        kind in payload_type(),
        body in prop::collection::vec(any::<u8>(), 0..600),
    ) {
        let meta = PacketMeta { scheme: Scheme::from_code(scheme).unwrap(), tile_id, frame_idx, payload_type: kind };
        let wire = encapsulate(&meta, &body).unwrap();
        prop_assert_eq!(wire.len(), HEADER_LEN + body.len());
        let (m, b) = decapsulate(&wire).unwrap();
        prop_assert_eq!(m, meta);
        prop_assert_eq!(b, body);
        prop_assert!(decapsulate(&wire[..wire.len() - 1]).is_err());
    }

    #[test]
    fn dbf_selection_shape(n in 2usize..300, p in 0.001f64..=1.0) {
        let idx = select_dbf_indices(n, p).unwrap();
        let k = ((p * n as f64) + 0.5).floor().max(2.0) as usize;
        prop_assert_eq!(idx.len(), k.min(n));
        prop_assert_eq!(idx[0], 0);
        prop_assert_eq!(*idx.last().unwrap(), n - 1);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}
