# Módulo de modelos
# Correlación, VEM, VTM, agregadores, codificador piramidal y decodificador
