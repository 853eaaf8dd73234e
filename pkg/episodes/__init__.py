# Módulo de episodios
# Tipos de episodio, generador sintético, fusión K-shot, métricas, optimizador y entrenamiento
