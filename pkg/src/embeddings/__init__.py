# Graph embedders: node2vec and LINE (second-order proximity)
