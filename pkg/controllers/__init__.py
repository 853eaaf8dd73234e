# Módulo de controladores
# Un controlador por comando de la CLI: train, eval, bench y shapes
